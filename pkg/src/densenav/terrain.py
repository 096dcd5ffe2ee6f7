"""Heightmap terrain model, traversability field, and planar region queries.

A terrain is a regular grid of node heights. The traversability field
p(x) = h(x)/h_max maps terrain height into [0, 1]; low values mark easy
ground, values near 1 mark the least traversable spots. Regions (axis
aligned boxes and discs) describe the initial set, the target set, and
hard obstacles of a navigation domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HeightmapFormatError",
    "OutOfDomainError",
    "TerrainGrid",
    "Box",
    "Disc",
    "Domain",
    "load_heightmap",
    "traversability",
    "contains",
    "interior_contains",
    "region_area",
    "regions_intersect",
    "region_within",
]


class HeightmapFormatError(ValueError):
    """Heightmap file is structurally malformed (ragged, empty, non-numeric)."""


class OutOfDomainError(ValueError):
    """Query point lies outside the supported region."""


@dataclass(frozen=True)
class TerrainGrid:
    """Regular heightmap grid.

    ``heights[i, j]`` is the node height at world position
    ``origin + cell_size * (j, i)``; row index grows with y. The grid spans
    ``[origin_x, origin_x + (n_cols-1)*cell_size]`` in x and analogously in y.
    Immutable after construction; safe for concurrent reads.
    """

    heights: np.ndarray
    cell_size: float
    origin: np.ndarray
    h_max: float = field(init=False)

    def __post_init__(self):
        heights = np.asarray(self.heights, dtype=float)
        if heights.ndim != 2 or heights.shape[0] < 2 or heights.shape[1] < 2:
            raise ValueError(f"heightmap must be at least 2x2, got shape {heights.shape}")
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if np.any(heights < 0):
            raise ValueError("heightmap contains negative heights")
        heights.setflags(write=False)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(2))
        object.__setattr__(self, "h_max", float(heights.max()))

    @property
    def n_rows(self) -> int:
        return self.heights.shape[0]

    @property
    def n_cols(self) -> int:
        return self.heights.shape[1]

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the supported rectangle."""
        xmin, ymin = self.origin
        return (
            float(xmin),
            float(ymin),
            float(xmin + (self.n_cols - 1) * self.cell_size),
            float(ymin + (self.n_rows - 1) * self.cell_size),
        )


def load_heightmap(path, cell_size: float, origin=(0.0, 0.0)) -> TerrainGrid:
    """Load a comma-separated heightmap file.

    The file holds one row of node heights per line, values separated by
    commas; ``#`` lines are comments. Row 0 of the file is the top of the
    terrain (largest y), so rows are flipped into the grid's y-up layout.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                values = [float(tok) for tok in stripped.split(",")]
            except ValueError as exc:
                raise HeightmapFormatError(f"{path}:{lineno}: non-numeric entry") from exc
            rows.append(values)
    if not rows:
        raise HeightmapFormatError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise HeightmapFormatError(f"{path}: ragged rows (expected width {width})")
    heights = np.array(rows[::-1], dtype=float)  # file row 0 -> largest y
    if np.any(heights < 0):
        raise ValueError(f"{path}: negative height entry")
    return TerrainGrid(heights=heights, cell_size=float(cell_size), origin=origin)


def traversability(grid: TerrainGrid, x) -> float:
    """Traversability p(x) = h(x)/h_max in [0, 1], bilinear in x.

    Flat all-zero terrain has p identically 0. Raises OutOfDomainError for
    points outside the grid rectangle.
    """
    x = np.asarray(x, dtype=float)
    xmin, ymin, xmax, ymax = grid.extent
    if not (xmin <= x[0] <= xmax and ymin <= x[1] <= ymax):
        raise OutOfDomainError(f"point {x.tolist()} outside terrain {grid.extent}")
    if grid.h_max == 0.0:
        return 0.0
    u = (x[0] - xmin) / grid.cell_size
    v = (x[1] - ymin) / grid.cell_size
    j = min(int(u), grid.n_cols - 2)
    i = min(int(v), grid.n_rows - 2)
    fu = u - j
    fv = v - i
    h = grid.heights
    val = (
        h[i, j] * (1 - fu) * (1 - fv)
        + h[i, j + 1] * fu * (1 - fv)
        + h[i + 1, j] * (1 - fu) * fv
        + h[i + 1, j + 1] * fu * fv
    )
    return float(min(max(val / grid.h_max, 0.0), 1.0))


def traversability_many(grid: TerrainGrid, points: np.ndarray) -> np.ndarray:
    """Vectorized traversability over an (N, 2) array of points."""
    pts = np.asarray(points, dtype=float)
    xmin, ymin, xmax, ymax = grid.extent
    ok_x = (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax)
    ok_y = (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
    if not np.all(ok_x & ok_y):
        bad = pts[~(ok_x & ok_y)][0]
        raise OutOfDomainError(f"point {bad.tolist()} outside terrain {grid.extent}")
    if grid.h_max == 0.0:
        return np.zeros(len(pts))
    u = (pts[:, 0] - xmin) / grid.cell_size
    v = (pts[:, 1] - ymin) / grid.cell_size
    j = np.minimum(u.astype(int), grid.n_cols - 2)
    i = np.minimum(v.astype(int), grid.n_rows - 2)
    fu = u - j
    fv = v - i
    h = grid.heights
    val = (
        h[i, j] * (1 - fu) * (1 - fv)
        + h[i, j + 1] * fu * (1 - fv)
        + h[i + 1, j] * (1 - fu) * fv
        + h[i + 1, j + 1] * fu * fv
    )
    return np.clip(val / grid.h_max, 0.0, 1.0)


# --- planar regions ---------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo, hi], boundary included."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(2)
        hi = np.asarray(self.hi, dtype=float).reshape(2)
        if not np.all(lo < hi):
            raise ValueError(f"box needs lo < hi componentwise, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Disc:
    """Closed disc of given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(2))


def contains(region, x) -> bool:
    """Membership test; the boundary counts as inside."""
    x = np.asarray(x, dtype=float)
    if isinstance(region, Box):
        return bool(np.all(x >= region.lo) and np.all(x <= region.hi))
    if isinstance(region, Disc):
        d = x - region.center
        return bool(d[0] * d[0] + d[1] * d[1] <= region.radius * region.radius)
    raise TypeError(f"unsupported region type {type(region)!r}")


def interior_contains(region, x) -> bool:
    """Strict-interior membership test (boundary excluded)."""
    x = np.asarray(x, dtype=float)
    if isinstance(region, Box):
        return bool(np.all(x > region.lo) and np.all(x < region.hi))
    if isinstance(region, Disc):
        d = x - region.center
        return bool(d[0] * d[0] + d[1] * d[1] < region.radius * region.radius)
    raise TypeError(f"unsupported region type {type(region)!r}")


def contains_many(region, points: np.ndarray) -> np.ndarray:
    """Vectorized closed membership over an (N, 2) array."""
    pts = np.asarray(points, dtype=float)
    if isinstance(region, Box):
        return np.all(pts >= region.lo, axis=1) & np.all(pts <= region.hi, axis=1)
    if isinstance(region, Disc):
        d = pts - region.center
        return np.einsum("ij,ij->i", d, d) <= region.radius * region.radius
    raise TypeError(f"unsupported region type {type(region)!r}")


def region_area(region) -> float:
    if isinstance(region, Box):
        span = region.hi - region.lo
        return float(span[0] * span[1])
    if isinstance(region, Disc):
        return float(np.pi * region.radius**2)
    raise TypeError(f"unsupported region type {type(region)!r}")


def regions_intersect(a, b) -> bool:
    """Whether two closed regions intersect (exact for box/disc pairs)."""
    if isinstance(a, Box) and isinstance(b, Box):
        return bool(np.all(a.lo <= b.hi) and np.all(b.lo <= a.hi))
    if isinstance(a, Disc) and isinstance(b, Disc):
        gap = np.linalg.norm(a.center - b.center)
        return bool(gap <= a.radius + b.radius)
    if isinstance(a, Disc):
        a, b = b, a
    # a is a Box, b is a Disc: closest point on the box to the disc center
    closest = np.clip(b.center, a.lo, a.hi)
    return bool(np.linalg.norm(closest - b.center) <= b.radius)


def region_within(region, bounds: Box) -> bool:
    """Whether a region lies entirely inside a bounding box."""
    if isinstance(region, Box):
        return bool(np.all(region.lo >= bounds.lo) and np.all(region.hi <= bounds.hi))
    if isinstance(region, Disc):
        return bool(
            np.all(region.center - region.radius >= bounds.lo)
            and np.all(region.center + region.radius <= bounds.hi)
        )
    raise TypeError(f"unsupported region type {type(region)!r}")


@dataclass(frozen=True)
class Domain:
    """Planning domain: bounds with optional initial/target sets and obstacles.

    The optimization runs over bounds minus the target interior. Target and
    initial may be left unset while assembling sub-pipelines; the planner
    requires both.
    """

    bounds: Box
    target: Box | Disc | None = None
    initial: Box | Disc | None = None
    obstacles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for name in ("target", "initial"):
            region = getattr(self, name)
            if region is not None and not region_within(region, self.bounds):
                raise ValueError(f"{name} region extends outside bounds")
        for obs in self.obstacles:
            if not region_within(obs, self.bounds):
                raise ValueError("obstacle region extends outside bounds")
        if self.target is not None and self.initial is not None:
            if regions_intersect(self.initial, self.target):
                raise ValueError("initial and target regions intersect")
        if self.initial is not None:
            for obs in self.obstacles:
                if regions_intersect(self.initial, obs):
                    raise ValueError("initial region intersects an obstacle")
