"""Gaussian radial basis, midpoint quadrature, and cost/source coefficient fits.

The basis is a lattice of isotropic Gaussians, strictly positive everywhere,
so nonnegative coefficient vectors expand to nonnegative functions. All
integrals over the punctured domain (bounds minus target) use a midpoint
rule whose nodes inside the target are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .terrain import Domain, TerrainGrid, contains_many, interior_contains, region_area, traversability_many

__all__ = [
    "BasisSet",
    "Quadrature",
    "CostVectors",
    "lattice_points",
    "build_basis",
    "eval_basis",
    "eval_basis_many",
    "build_quadrature",
    "cost_vectors",
    "fit_h0",
    "fit_function",
]


@dataclass(frozen=True)
class BasisSet:
    """Q Gaussian radial basis functions with shared width sigma."""

    centers: np.ndarray  # (Q, 2)
    sigma: float

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != 2 or centers.shape[0] < 4:
            raise ValueError(f"need at least 4 centers of dimension 2, got {centers.shape}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        # pairwise-distinct centers keep the Gram matrix nonsingular
        rounded = {tuple(c) for c in np.round(centers, 12)}
        if len(rounded) != len(centers):
            raise ValueError("basis centers must be pairwise distinct")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    @property
    def size(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class Quadrature:
    """Midpoint-rule nodes and positive area weights."""

    nodes: np.ndarray  # (N, 2)
    weights: np.ndarray  # (N,)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if len(nodes) != len(weights) or np.any(weights <= 0):
            raise ValueError("quadrature needs matching nodes and positive weights")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def total_area(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class CostVectors:
    """Traversability-weighted basis integrals B1, B2 and source coefficients t.

    B1 and B2 are both the integral of p(x) * phi_k(x) and are computed by the
    same code path; both names are kept because the density and control terms
    of the objective are weighted separately. t is filled by fit_h0.
    """

    B1: np.ndarray
    B2: np.ndarray
    t: np.ndarray | None = None


def lattice_points(bounds, counts: tuple[int, int]) -> tuple[np.ndarray, float]:
    """Uniform inclusive lattice over a Box; returns (points, spacing).

    Spacing is the larger of the per-axis spacings (they coincide for
    proportionate counts).
    """
    nx, ny = counts
    if nx < 2 or ny < 2:
        raise ValueError(f"lattice counts must be >= 2, got {counts}")
    xs = np.linspace(bounds.lo[0], bounds.hi[0], nx)
    ys = np.linspace(bounds.lo[1], bounds.hi[1], ny)
    pts = np.array([(x, y) for y in ys for x in xs])
    spacing = max(xs[1] - xs[0], ys[1] - ys[0])
    return pts, float(spacing)


def build_basis(
    domain: Domain,
    grid_counts: tuple[int, int],
    sigma_scale: float,
    exclude_target: bool = True,
) -> BasisSet:
    """Lattice basis over the domain bounds; sigma = sigma_scale * spacing.

    With exclude_target (the default) lattice points strictly inside the
    target region are dropped, matching an optimization domain that excludes
    the target interior.
    """
    if sigma_scale <= 0:
        raise ValueError(f"sigma_scale must be positive, got {sigma_scale}")
    pts, spacing = lattice_points(domain.bounds, grid_counts)
    if exclude_target and domain.target is not None:
        keep = [p for p in pts if not interior_contains(domain.target, p)]
        pts = np.array(keep)
    return BasisSet(centers=pts, sigma=sigma_scale * spacing)


def eval_basis(basis: BasisSet, x) -> np.ndarray:
    """Basis vector at one point: exp(-|x - c_k|^2 / (2 sigma^2)), in (0, 1]."""
    x = np.asarray(x, dtype=float)
    d = basis.centers - x
    sq = np.einsum("ij,ij->i", d, d)
    return np.exp(-sq / (2.0 * basis.sigma**2))


def eval_basis_many(basis: BasisSet, points: np.ndarray) -> np.ndarray:
    """Basis matrix over (N, 2) points; result is (N, Q)."""
    pts = np.asarray(points, dtype=float)
    sq = (
        np.sum(pts**2, axis=1)[:, None]
        - 2.0 * pts @ basis.centers.T
        + np.sum(basis.centers**2, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)  # guard tiny negative round-off
    return np.exp(-sq / (2.0 * basis.sigma**2))


def build_quadrature(domain: Domain, resolution: tuple[int, int]) -> Quadrature:
    """Midpoint rule on a uniform cell partition of the domain bounds.

    Nodes inside the target region are dropped together with their weights,
    so the weights sum to the measured area of bounds minus target cells.
    """
    rx, ry = resolution
    if rx < 2 or ry < 2:
        raise ValueError(f"quadrature resolution must be >= 2, got {resolution}")
    lo, hi = domain.bounds.lo, domain.bounds.hi
    dx = (hi[0] - lo[0]) / rx
    dy = (hi[1] - lo[1]) / ry
    xs = lo[0] + dx * (np.arange(rx) + 0.5)
    ys = lo[1] + dy * (np.arange(ry) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    if domain.target is not None:
        keep = ~contains_many(domain.target, nodes)
        nodes = nodes[keep]
    weights = np.full(len(nodes), dx * dy)
    return Quadrature(nodes=nodes, weights=weights)


def cost_vectors(
    basis: BasisSet,
    grid: TerrainGrid,
    quad: Quadrature,
    p_floor: float = 0.0,
) -> CostVectors:
    """Quadrature of p(x) phi_k(x): B1_k = sum_i w_i p(x_i) phi_k(x_i); B2 = B1.

    p_floor adds a uniform offset to p so perfectly flat ground can still
    carry a small movement cost; the default keeps the plain traversability.
    """
    p = traversability_many(grid, quad.nodes) + p_floor
    phi = eval_basis_many(basis, quad.nodes)
    b = phi.T @ (quad.weights * p)
    return CostVectors(B1=b, B2=b.copy())


def fit_function(basis: BasisSet, quad: Quadrature, values: np.ndarray, lambda_fit: float | None = None) -> np.ndarray:
    """Regularized least-squares coefficients for values sampled at the nodes.

    Solves (M^T M + lambda I) t = M^T values with M the basis matrix at the
    quadrature nodes. The default lambda is 1e-8 * trace(M^T M) / Q, which
    keeps the near-singular normal matrix of a dense lattice solvable.
    """
    phi = eval_basis_many(basis, quad.nodes)
    normal = phi.T @ phi
    if lambda_fit is None:
        lambda_fit = 1e-8 * np.trace(normal) / basis.size
    normal[np.diag_indices_from(normal)] += lambda_fit
    return np.linalg.solve(normal, phi.T @ np.asarray(values, dtype=float))


def fit_h0(basis: BasisSet, domain: Domain, quad: Quadrature, lambda_fit: float | None = None) -> np.ndarray:
    """Coefficients t of the normalized initial-set indicator.

    h0 is 1/area inside the initial region and 0 outside, so it integrates
    to one; t is its regularized least-squares fit over the quadrature nodes.
    """
    if domain.initial is None:
        raise ValueError("domain has no initial region")
    area = region_area(domain.initial)
    h0 = np.where(contains_many(domain.initial, quad.nodes), 1.0 / area, 0.0)
    return fit_function(basis, quad, h0, lambda_fit)
