"""Grid A* over the traversability costmap, with a Dijkstra mode.

Cells are ranked by the traversability at their centers; edges connect
8-neighbors and cost the step length times the average endpoint
traversability plus a small per-meter floor that breaks ties toward short
paths. The heuristic is the Euclidean distance scaled by that per-meter
floor, so weight 1 stays admissible and weight 0 recovers Dijkstra; larger
weights reproduce greedy, possibly suboptimal search.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .terrain import Domain, TerrainGrid, contains, regions_intersect, traversability, Box

__all__ = [
    "CostmapGraph",
    "GridPath",
    "NoPathError",
    "build_costmap",
    "astar",
    "path_traversability_cost",
    "export_path",
]

_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


class NoPathError(RuntimeError):
    """No unblocked path exists between the queried cells."""


@dataclass(frozen=True)
class CostmapGraph:
    """Per-cell traversability costs on a uniform partition of the bounds."""

    costs: np.ndarray  # (n_rows, n_cols), row 0 at the bottom
    blocked: np.ndarray  # bool, same shape
    origin: np.ndarray  # lower-left corner of the partition
    cell_dx: float
    cell_dy: float

    def __post_init__(self):
        if self.costs.shape != self.blocked.shape:
            raise ValueError("cost and blocked grids must share their shape")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(2))

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape

    def center(self, cell: tuple[int, int]) -> np.ndarray:
        row, col = cell
        return self.origin + np.array([(col + 0.5) * self.cell_dx, (row + 0.5) * self.cell_dy])

    def cell_of(self, point) -> tuple[int, int]:
        p = np.asarray(point, dtype=float)
        col = int((p[0] - self.origin[0]) / self.cell_dx)
        row = int((p[1] - self.origin[1]) / self.cell_dy)
        row = min(max(row, 0), self.shape[0] - 1)
        col = min(max(col, 0), self.shape[1] - 1)
        return row, col


@dataclass(frozen=True)
class GridPath:
    """Cell chain with world-space waypoints and the accumulated edge cost."""

    cells: tuple
    points: np.ndarray
    total_cost: float

    @property
    def length(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def build_costmap(grid: TerrainGrid, domain: Domain, resolution: tuple[int, int]) -> CostmapGraph:
    """Sample p at cell centers; block cells that intersect any obstacle."""
    n_rows, n_cols = resolution
    if n_rows < 2 or n_cols < 2:
        raise ValueError(f"costmap resolution must be >= 2, got {resolution}")
    lo, hi = domain.bounds.lo, domain.bounds.hi
    dx = (hi[0] - lo[0]) / n_cols
    dy = (hi[1] - lo[1]) / n_rows
    costs = np.zeros((n_rows, n_cols))
    blocked = np.zeros((n_rows, n_cols), dtype=bool)
    for row in range(n_rows):
        for col in range(n_cols):
            cx = lo[0] + (col + 0.5) * dx
            cy = lo[1] + (row + 0.5) * dy
            costs[row, col] = traversability(grid, (cx, cy))
            cell_box = Box(lo=(lo[0] + col * dx, lo[1] + row * dy), hi=(lo[0] + (col + 1) * dx, lo[1] + (row + 1) * dy))
            blocked[row, col] = any(regions_intersect(cell_box, obs) for obs in domain.obstacles)
    return CostmapGraph(costs=costs, blocked=blocked, origin=lo, cell_dx=dx, cell_dy=dy)


def astar(
    cmap: CostmapGraph,
    start: tuple[int, int],
    goal: tuple[int, int],
    heuristic_weight: float = 1.0,
    kappa: float = 1e-3,
) -> GridPath:
    """Lowest-f path from start to goal over the 8-connected costmap.

    Edge cost: step length * ((p_a + p_b)/2 + kappa). Heuristic:
    heuristic_weight * Euclidean distance * kappa, kappa being the minimum
    per-meter edge cost, so weight <= 1 is admissible and weight 0 is
    Dijkstra. Ties break deterministically toward the smaller (row, col).
    """
    n_rows, n_cols = cmap.shape
    for name, cell in (("start", start), ("goal", goal)):
        if not (0 <= cell[0] < n_rows and 0 <= cell[1] < n_cols):
            raise ValueError(f"{name} cell {cell} outside the costmap")
        if cmap.blocked[cell]:
            raise NoPathError(f"{name} cell {cell} is blocked")

    def heuristic(cell):
        d = cmap.center(cell) - cmap.center(goal)
        return heuristic_weight * kappa * math.hypot(d[0], d[1])

    g_score = {start: 0.0}
    came_from: dict = {}
    open_heap = [(heuristic(start), start)]
    closed = set()
    while open_heap:
        f, current = heapq.heappop(open_heap)
        if current == goal:
            cells = [current]
            while cells[-1] in came_from:
                cells.append(came_from[cells[-1]])
            cells.reverse()
            points = np.array([cmap.center(c) for c in cells])
            return GridPath(cells=tuple(cells), points=points, total_cost=g_score[goal])
        if current in closed:
            continue
        closed.add(current)
        for dr, dc in _NEIGHBORS:
            nb = (current[0] + dr, current[1] + dc)
            if not (0 <= nb[0] < n_rows and 0 <= nb[1] < n_cols) or cmap.blocked[nb]:
                continue
            step = math.hypot(dr * cmap.cell_dy, dc * cmap.cell_dx)
            edge = step * (0.5 * (cmap.costs[current] + cmap.costs[nb]) + kappa)
            tentative = g_score[current] + edge
            if tentative < g_score.get(nb, math.inf):
                g_score[nb] = tentative
                came_from[nb] = current
                heapq.heappush(open_heap, (tentative + heuristic(nb), nb))
    raise NoPathError(f"no path from {start} to {goal}")


def path_traversability_cost(path: GridPath, grid: TerrainGrid, speed: float) -> float:
    """Integral of p over time when the polyline is traversed at fixed speed."""
    if speed <= 0:
        raise ValueError(f"speed must be positive, got {speed}")
    if len(path.points) == 0:
        raise ValueError("empty path")
    p = [traversability(grid, pt) for pt in path.points]
    cost = 0.0
    for i in range(len(path.points) - 1):
        seg = float(np.linalg.norm(path.points[i + 1] - path.points[i]))
        cost += 0.5 * (p[i] + p[i + 1]) * seg / speed
    return cost


def export_path(path: GridPath, grid: TerrainGrid, speed: float, stream) -> None:
    """Write the trajectory-export format with zeroed control columns."""
    t = 0.0
    prev = None
    for pt in path.points:
        if prev is not None:
            t += float(np.linalg.norm(pt - prev)) / speed
        p = traversability(grid, pt)
        stream.write(f"{t:.12g},{pt[0]:.12g},{pt[1]:.12g},0,0,{p:.12g}\n")
        prev = pt
