"""Assembly of the density-transport linear program and solution extraction.

The decision variables are basis coefficients: r for the occupation density
rho, z_j for the flux components rho_bar_j, and w_j for the epigraph bounds
Gamma_j >= |rho_bar_j|. The program minimizes the traversability-weighted
density and flux costs subject to the discretized divergence identity and
hard-obstacle rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, Quadrature, eval_basis_many
from .lp import LPSolution, LPStandardForm
from .operators import GeneratorMatrix
from .terrain import contains_many

__all__ = [
    "NavProgram",
    "DensitySolution",
    "NonOptimalSolveError",
    "obstacle_row",
    "assemble",
    "extract_density",
]


class NonOptimalSolveError(RuntimeError):
    """Density extraction was attempted on a non-optimal LP solution."""

    def __init__(self, status: str):
        super().__init__(f"LP solve ended with status {status!r}, not optimal")
        self.status = status


@dataclass(frozen=True)
class NavProgram:
    """Data of the finite-dimensional transport program.

    P_f is the drift generator (the zero matrix for pure single-integrator
    planning); P_g holds one generator per control direction. Setting
    speed_cap adds the coupling rows w_j <= speed_cap * r, which tie the
    flux magnitude to the occupation density so the recovered feedback
    rho_bar/rho respects the speed limit; leave it None for the bare
    program.
    """

    B1: np.ndarray
    B2: np.ndarray
    t: np.ndarray
    P_f: GeneratorMatrix
    P_g: tuple
    obstacle_rows: tuple = ()
    speed_cap: float | None = None

    def __post_init__(self):
        q = len(self.B1)
        object.__setattr__(self, "P_g", tuple(self.P_g))
        object.__setattr__(self, "obstacle_rows", tuple(self.obstacle_rows))
        if len(self.B2) != q or len(self.t) != q:
            raise ValueError("B1, B2, t must share the basis dimension")
        if self.P_f.P.shape != (q, q):
            raise ValueError("drift generator dimension mismatch")
        if not self.P_g:
            raise ValueError("need at least one control-direction generator")
        for g in self.P_g:
            if g.P.shape != (q, q):
                raise ValueError("control generator dimension mismatch")
        for row in self.obstacle_rows:
            if len(row) != q:
                raise ValueError("obstacle row dimension mismatch")
        if self.speed_cap is not None and self.speed_cap <= 0:
            raise ValueError("speed_cap must be positive when given")

    @property
    def q(self) -> int:
        return len(self.B1)

    @property
    def m(self) -> int:
        return len(self.P_g)


@dataclass(frozen=True)
class DensitySolution:
    """Extracted coefficient blocks and the attained objective value."""

    r: np.ndarray
    z: tuple  # m coefficient vectors for the flux components
    w: tuple  # m coefficient vectors for the epigraph bounds
    objective: float


def obstacle_row(basis: BasisSet, obstacle, quad: Quadrature) -> np.ndarray:
    """Quadrature of phi_k over the obstacle: sum of w_i phi_k(x_i) inside.

    A region that captures no quadrature node yields an all-zero row (the
    constraint is vacuous); that is reported as a warning, not an error.
    """
    inside = contains_many(obstacle, quad.nodes)
    if not np.any(inside):
        warnings.warn("obstacle contains no quadrature nodes; constraint row is vacuous")
        return np.zeros(basis.size)
    phi = eval_basis_many(basis, quad.nodes[inside])
    return phi.T @ quad.weights[inside]


def assemble(program: NavProgram) -> LPStandardForm:
    """Build the standard-form LP over v = (r, z_1..z_m, w_1..w_m).

    Cost is (B1, 0, .., 0, B2, .., B2). Inequalities are the epigraph pairs
    w_j - z_j >= 0 and w_j + z_j >= 0 (strictness relaxed to closedness),
    plus speed-cap rows speed_cap * r - w_j >= 0 when configured. Equalities
    are the divergence rows -P_f r - sum_j P_gj z_j = t followed by one
    obstacle row each. Bounds: r >= 0, z free, w >= 0.
    """
    q, m = program.q, program.m
    n = (1 + 2 * m) * q

    def r_cols(mat):
        block = np.zeros((mat.shape[0], n))
        block[:, :q] = mat
        return block

    c = np.concatenate([program.B1, np.zeros(m * q), np.tile(program.B2, m)])

    eq_rows = [np.zeros((q, n))]
    eq_rows[0][:, :q] = -program.P_f.P
    for j, gen in enumerate(program.P_g):
        eq_rows[0][:, (1 + j) * q : (2 + j) * q] = -gen.P
    b_eq = [program.t]
    for row in program.obstacle_rows:
        eq_rows.append(r_cols(np.asarray(row, dtype=float)[None, :]))
        b_eq.append(np.zeros(1))
    A_eq = np.vstack(eq_rows)
    b_eq = np.concatenate(b_eq)

    eye = np.eye(q)
    ineq_blocks = []
    for j in range(m):
        z_slice = slice((1 + j) * q, (2 + j) * q)
        w_slice = slice((1 + m + j) * q, (2 + m + j) * q)
        minus = np.zeros((q, n))
        minus[:, z_slice] = -eye
        minus[:, w_slice] = eye
        plus = np.zeros((q, n))
        plus[:, z_slice] = eye
        plus[:, w_slice] = eye
        ineq_blocks.extend([minus, plus])
    if program.speed_cap is not None:
        for j in range(m):
            w_slice = slice((1 + m + j) * q, (2 + m + j) * q)
            cap = np.zeros((q, n))
            cap[:, :q] = program.speed_cap * eye
            cap[:, w_slice] = -eye
            ineq_blocks.append(cap)
    A_ineq = np.vstack(ineq_blocks)
    b_ineq = np.zeros(A_ineq.shape[0])

    lower = np.zeros(n)
    lower[q : (1 + m) * q] = -np.inf  # z blocks are sign-free
    return LPStandardForm(c=c, A_eq=A_eq, b_eq=b_eq, A_ineq=A_ineq, b_ineq=b_ineq, lower=lower)


def extract_density(sol: LPSolution, program: NavProgram) -> DensitySolution:
    """Slice an optimal primal vector into (r, z_j, w_j) coefficient blocks.

    Round-off negatives of r in [-1e-9, 0) are clamped to zero; anything
    more negative is a solver failure and passes through for the caller's
    residual checks to catch.
    """
    if sol.status != "optimal":
        raise NonOptimalSolveError(sol.status)
    q, m = program.q, program.m
    v = sol.primal
    r = v[:q].copy()
    r[(r >= -1e-9) & (r < 0.0)] = 0.0
    z = tuple(v[(1 + j) * q : (2 + j) * q].copy() for j in range(m))
    w = tuple(v[(1 + m + j) * q : (2 + m + j) * q].copy() for j in range(m))
    objective = float(
        program.B1 @ v[:q] + sum(program.B2 @ wj for wj in w)
    )
    return DensitySolution(r=r, z=z, w=w, objective=objective)


def equality_residual(solution: DensitySolution, program: NavProgram) -> float:
    """Max-norm residual of the divergence rows at an extracted solution."""
    lhs = -program.P_f.P @ solution.r
    for gen, zj in zip(program.P_g, solution.z):
        lhs -= gen.P @ zj
    return float(np.max(np.abs(lhs - program.t)))
