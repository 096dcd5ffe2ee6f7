"""Density-space trajectory planning over traversability terrains.

Pipeline: heightmap -> traversability field -> Gaussian basis and
quadrature -> data-driven Perron-Frobenius generators -> linear program in
density space -> feedback field -> rollout, with a grid A* baseline for
comparison.
"""

from .terrain import (
    Box,
    Disc,
    Domain,
    HeightmapFormatError,
    OutOfDomainError,
    TerrainGrid,
    contains,
    load_heightmap,
    traversability,
)
from .basis import BasisSet, CostVectors, Quadrature, build_basis, build_quadrature, cost_vectors, eval_basis, fit_h0
from .operators import (
    ConstantField,
    GeneratorMatrix,
    KoopmanMatrix,
    SnapshotData,
    edmd_fit,
    generate_snapshots,
    normalize_rows,
    pf_generator,
)
from .lp import LPSolution, LPStandardForm, solve_lp
from .nav_opt import DensitySolution, NavProgram, assemble, extract_density, obstacle_row
from .control import ControlField, Trajectory, control_field, eval_density, feedback, rollout, trajectory_cost
from .baseline import CostmapGraph, GridPath, NoPathError, astar, build_costmap, path_traversability_cost

__version__ = "0.1.0"
