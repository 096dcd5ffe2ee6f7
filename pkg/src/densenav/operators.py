"""Data-driven Perron-Frobenius generator approximation.

Snapshot pairs of a vector field are lifted through the Gaussian basis, a
Koopman matrix is fit by least squares, clipped and row-normalized to an
approximate Markov matrix, and the P-F generator is extracted as
(U_hat^T - I) / dt. Row normalization makes the generator exactly
mass-conserving (columns sum to zero); `absorbing_generator` builds the
variant that leaks mass into a designated region, which the navigation
program needs so that transported density can exit at the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, eval_basis_many
from .terrain import Domain

__all__ = [
    "ConditioningError",
    "ConstantField",
    "SnapshotData",
    "KoopmanMatrix",
    "GeneratorMatrix",
    "generate_snapshots",
    "edmd_fit",
    "normalize_rows",
    "pf_generator",
    "transport_generator",
    "target_absorption",
    "dump_snapshots",
    "load_snapshots",
]


class ConditioningError(np.linalg.LinAlgError):
    """Least-squares system numerically singular even after regularization."""


@dataclass(frozen=True)
class ConstantField:
    """Spatially constant vector field; its flow is an exact translation."""

    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=float).reshape(2))


@dataclass(frozen=True)
class SnapshotData:
    """Paired states X and their time-dt flow images Y, both inside bounds."""

    X: np.ndarray  # (P, 2)
    Y: np.ndarray  # (P, 2)
    dt: float

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.shape != Y.shape or X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(f"snapshot arrays must both be (P, 2), got {X.shape} / {Y.shape}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def count(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class KoopmanMatrix:
    """Finite Koopman approximation; `normalized` marks the Markov form."""

    U: np.ndarray
    normalized: bool

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError(f"Koopman matrix must be square, got {U.shape}")
        object.__setattr__(self, "U", U)


@dataclass(frozen=True)
class GeneratorMatrix:
    """P-F generator in coefficient space for one vector field.

    For the conservative construction every column sums to zero; absorbing
    generators (built by `absorbing_generator`) have nonpositive column sums
    where mass leaks out of the retained basis.
    """

    P: np.ndarray
    field_tag: str
    absorbing: bool = False

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"generator must be square, got {P.shape}")
        object.__setattr__(self, "P", P)


def _rk4_step(field, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = np.asarray(field(x), dtype=float)
    k2 = np.asarray(field(x + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(field(x + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(field(x + dt * k3), dtype=float)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def flow_step(field, x, dt: float) -> np.ndarray:
    """One flow step: exact translation for ConstantField, one RK4 step else."""
    x = np.asarray(x, dtype=float)
    if isinstance(field, ConstantField):
        return x + dt * field.vector
    return _rk4_step(field, x, dt)


def generate_snapshots(
    field,
    domain: Domain,
    n_samples: int,
    dt: float,
    seed: int,
    max_retries: int = 100,
) -> SnapshotData:
    """Sample snapshot pairs with uniformly random seeded start points.

    Pairs whose image leaves the domain bounds are resampled up to
    max_retries times each and finally kept with the image clamped to the
    bounds, so the returned pair count is always n_samples.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounds.lo, domain.bounds.hi

    def draw(count):
        return lo + (hi - lo) * rng.random((count, 2))

    if isinstance(field, ConstantField):
        X = draw(n_samples)
        Y = X + dt * field.vector
        for _ in range(max_retries):
            bad = ~(np.all(Y >= lo, axis=1) & np.all(Y <= hi, axis=1))
            if not np.any(bad):
                break
            X[bad] = draw(int(bad.sum()))
            Y[bad] = X[bad] + dt * field.vector
        Y = np.clip(Y, lo, hi)
        return SnapshotData(X=X, Y=Y, dt=dt)

    X = np.empty((n_samples, 2))
    Y = np.empty((n_samples, 2))
    for i in range(n_samples):
        for _ in range(max_retries + 1):
            x = draw(1)[0]
            y = _rk4_step(field, x, dt)
            if np.all(y >= lo) and np.all(y <= hi):
                break
        X[i] = x
        Y[i] = np.clip(y, lo, hi)
    return SnapshotData(X=X, Y=Y, dt=dt)


def edmd_fit(data: SnapshotData, basis: BasisSet, lambda_reg: float = 0.0) -> KoopmanMatrix:
    """Least-squares Koopman matrix: (G + lambda I) U = A.

    G and A are the (1/P)-scaled Gram and cross matrices of the lifted
    snapshots. Raises ConditioningError with a smallest-eigenvalue estimate
    when the regularized system is still numerically singular.
    """
    if lambda_reg < 0:
        raise ValueError(f"lambda_reg must be nonnegative, got {lambda_reg}")
    phi_x = eval_basis_many(basis, data.X)  # (P, Q)
    phi_y = eval_basis_many(basis, data.Y)
    P = data.count
    G = phi_x.T @ phi_x / P
    A = phi_x.T @ phi_y / P
    G_reg = G + lambda_reg * np.eye(basis.size)
    try:
        U = np.linalg.solve(G_reg, A)
    except np.linalg.LinAlgError as exc:
        smallest = float(np.linalg.eigvalsh(G_reg)[0])
        raise ConditioningError(
            f"Gram matrix singular (smallest eigenvalue ~ {smallest:.3e}); "
            f"increase lambda_reg or the sample count"
        ) from exc
    if not np.all(np.isfinite(U)):
        smallest = float(np.linalg.eigvalsh(G_reg)[0])
        raise ConditioningError(
            f"Gram solve produced non-finite entries (smallest eigenvalue ~ {smallest:.3e})"
        )
    return KoopmanMatrix(U=U, normalized=False)


def default_lambda(data: SnapshotData, basis: BasisSet) -> float:
    """Tikhonov weight 1e-8 * trace(G) / Q for the near-singular dense lattice."""
    phi_x = eval_basis_many(basis, data.X)
    trace = float(np.sum(phi_x * phi_x)) / data.count
    return 1e-8 * trace / basis.size


def normalize_rows(koopman: KoopmanMatrix) -> KoopmanMatrix:
    """Clip negatives to zero, then scale each row to unit sum.

    Rows whose clipped sum vanishes (basis functions with no data support)
    become identity rows, preserving the Markov property.
    """
    U = np.clip(koopman.U, 0.0, None)
    sums = U.sum(axis=1)
    dead = sums <= 0.0
    U[dead] = np.eye(U.shape[0])[dead]
    sums[dead] = 1.0
    U /= sums[:, None]
    return KoopmanMatrix(U=U, normalized=True)


def pf_generator(koopman: KoopmanMatrix, dt: float, field_tag: str = "drift") -> GeneratorMatrix:
    """P-F generator (U_hat^T - I) / dt of a normalized Koopman matrix.

    Row stochasticity of U_hat makes every column of the result sum to zero
    (total density is conserved by the Markov approximation).
    """
    if not koopman.normalized:
        raise ValueError("pf_generator requires a normalized Koopman matrix")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    P = (koopman.U.T - np.eye(koopman.U.shape[0])) / dt
    return GeneratorMatrix(P=P, field_tag=field_tag)


def transport_generator(
    data: SnapshotData,
    basis: BasisSet,
    absorption: np.ndarray | None = None,
    lambda_reg: float | None = None,
    field_tag: str = "drift",
    markov: bool = False,
) -> GeneratorMatrix:
    """Generator for the navigation program, optionally absorbing at a sink.

    The generator comes from the plain least-squares Koopman matrix, whose
    truncation error is O(dt) and falls with more data; a conservation
    projection then cancels each column's spurious residual source/sink on
    the diagonal, so every column sums to zero exactly and density can move
    but not appear or vanish. The markov flag routes through
    clip-and-normalize first; that guarantees sign structure but adds an
    O(sigma^2/dt) diffusion bias, too blunt to steer the transport program
    (coefficient nonnegativity of the program keeps the density sign-safe
    either way).

    `absorption` is a nonnegative per-coefficient killing rate, subtracted
    from the diagonal. The navigation program needs one supported on the
    target so the injected density has an outlet there; see
    `target_absorption`.
    """
    if lambda_reg is None:
        lambda_reg = default_lambda(data, basis)
    koop = edmd_fit(data, basis, lambda_reg)
    if markov:
        koop = normalize_rows(koop)
    P = (koop.U.T - np.eye(basis.size)) / data.dt
    P[np.diag_indices_from(P)] -= P.sum(axis=0)
    absorbing = False
    if absorption is not None:
        absorption = np.asarray(absorption, dtype=float)
        if len(absorption) != basis.size or np.any(absorption < 0):
            raise ValueError("absorption must be a nonnegative vector of basis size")
        P[np.diag_indices_from(P)] -= absorption
        absorbing = bool(np.any(absorption > 0))
    return GeneratorMatrix(P=P, field_tag=field_tag, absorbing=absorbing)


def target_absorption(basis: BasisSet, target, rate: float, reach: float | None = None) -> np.ndarray:
    """Compactly supported killing rates for basis functions at the target.

    Rate decays quadratically from `rate` at the target boundary to zero at
    distance `reach` (default: one basis width), and is exactly zero
    farther out, so no density can exit away from the target.
    """
    from .terrain import Box, Disc  # local import keeps module load acyclic

    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if reach is None:
        reach = basis.sigma
    if isinstance(target, Disc):
        dist = np.maximum(np.linalg.norm(basis.centers - target.center, axis=1) - target.radius, 0.0)
    elif isinstance(target, Box):
        gap = np.maximum(target.lo - basis.centers, basis.centers - target.hi)
        dist = np.linalg.norm(np.maximum(gap, 0.0), axis=1)
    else:
        raise TypeError(f"unsupported region type {type(target)!r}")
    return rate * np.maximum(1.0 - dist / reach, 0.0) ** 2


def dump_snapshots(data: SnapshotData, stream) -> None:
    """Write pairs as comma-separated x1,x2,y1,y2 lines."""
    for x, y in zip(data.X, data.Y):
        stream.write(f"{x[0]:.17g},{x[1]:.17g},{y[0]:.17g},{y[1]:.17g}\n")


def load_snapshots(stream, dt: float) -> SnapshotData:
    """Read pairs written by dump_snapshots."""
    rows = []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        vals = [float(tok) for tok in line.split(",")]
        if len(vals) != 4:
            raise ValueError(f"expected 4 comma-separated values, got {line!r}")
        rows.append(vals)
    arr = np.asarray(rows, dtype=float)
    return SnapshotData(X=arr[:, :2], Y=arr[:, 2:], dt=dt)
