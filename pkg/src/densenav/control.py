"""Feedback field from density coefficients and closed-loop rollout.

The optimal feedback is the flux-to-density ratio u = rho_bar / rho. A
positive floor under rho removes the singularity off the transport
corridor, and the ratio is norm-clipped to a speed cap, which keeps the
integrator stable where the density is thin. Rollouts integrate the single
integrator x' = u(x) with classical RK4 and meter the traversability cost
along the way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, Quadrature, eval_basis, eval_basis_many
from .nav_opt import DensitySolution
from .terrain import Domain, OutOfDomainError, TerrainGrid, contains, traversability

__all__ = [
    "ControlField",
    "Trajectory",
    "control_field",
    "eval_density",
    "feedback",
    "rollout",
    "trajectory_cost",
    "export_trajectory",
]


@dataclass(frozen=True)
class ControlField:
    """Density/flux coefficients with the feedback regularization constants."""

    basis: BasisSet
    r: np.ndarray
    z: tuple
    epsilon: float
    u_max: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.u_max <= 0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")
        if len(self.r) != self.basis.size or any(len(zj) != self.basis.size for zj in self.z):
            raise ValueError("coefficient dimensions do not match the basis")
        object.__setattr__(self, "z", tuple(np.asarray(zj, dtype=float) for zj in self.z))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run with running traversability and effort costs."""

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    cost: float  # integral of p along the run
    effort: float  # integral of p * |u|_1 along the run
    reached_target: bool

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) != len(self.controls):
            raise ValueError("trajectory arrays must share their length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")


def control_field(
    basis: BasisSet,
    solution: DensitySolution,
    quad: Quadrature,
    epsilon_scale: float = 1e-6,
    u_max: float = 1.0,
) -> ControlField:
    """Build the feedback field from an extracted solution.

    The density floor is epsilon_scale times the peak density over the
    quadrature nodes; when the optimal density is (numerically) zero
    everywhere the scale itself is used so the floor stays positive.
    """
    rho_nodes = eval_basis_many(basis, quad.nodes) @ solution.r
    peak = float(rho_nodes.max(initial=0.0))
    epsilon = epsilon_scale * peak if peak > 0 else epsilon_scale
    return ControlField(basis=basis, r=solution.r, z=solution.z, epsilon=epsilon, u_max=u_max)


def eval_density(field: ControlField, x) -> float:
    """Density value Phi(x) . r; near zero away from the transport corridor."""
    return float(eval_basis(field.basis, x) @ field.r)


def feedback(field: ControlField, x) -> np.ndarray:
    """Feedback u_j = (Phi . z_j) / max(Phi . r, epsilon), norm-capped at u_max."""
    phi = eval_basis(field.basis, x)
    denom = max(float(phi @ field.r), field.epsilon)
    u = np.array([float(phi @ zj) for zj in field.z]) / denom
    speed = float(np.linalg.norm(u))
    if speed > field.u_max:
        u *= field.u_max / speed
    return u


def rollout(
    field: ControlField,
    x0,
    dt: float,
    t_max: float,
    domain: Domain,
    grid: TerrainGrid,
) -> Trajectory:
    """Integrate x' = u(x) from x0 until target contact, t_max, or bounds exit.

    RK4 steps of size dt; the traversability cost and the p-weighted control
    effort accumulate by the trapezoid rule on the samples. Starting inside
    an obstacle or outside the bounds is a precondition error; starting on
    the target yields the single-sample success trajectory.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    x = np.asarray(x0, dtype=float).copy()
    if not contains(domain.bounds, x):
        raise ValueError(f"start point {x.tolist()} outside domain bounds")
    for obs in domain.obstacles:
        if contains(obs, x):
            raise ValueError(f"start point {x.tolist()} lies inside an obstacle")
    if domain.target is None:
        raise ValueError("domain has no target region")

    times = [0.0]
    states = [x.copy()]
    controls = [feedback(field, x)]
    cost = 0.0
    effort = 0.0
    reached = contains(domain.target, x)
    p_prev = traversability(grid, x)
    e_prev = p_prev * float(np.abs(controls[0]).sum())
    steps = int(round(t_max / dt))
    for k in range(steps):
        if reached:
            break
        u1 = feedback(field, x)
        k1 = u1
        k2 = feedback(field, x + 0.5 * dt * k1)
        k3 = feedback(field, x + 0.5 * dt * k2)
        k4 = feedback(field, x + dt * k3)
        x_new = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not contains(domain.bounds, x_new):
            break
        x = x_new
        u_new = feedback(field, x)
        p_new = traversability(grid, x)
        e_new = p_new * float(np.abs(u_new).sum())
        cost += 0.5 * dt * (p_prev + p_new)
        effort += 0.5 * dt * (e_prev + e_new)
        p_prev, e_prev = p_new, e_new
        times.append((k + 1) * dt)
        states.append(x.copy())
        controls.append(u_new)
        reached = contains(domain.target, x)
    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        controls=np.asarray(controls),
        cost=cost,
        effort=effort,
        reached_target=reached,
    )


def trajectory_cost(traj: Trajectory, grid: TerrainGrid) -> float:
    """Trapezoidal integral of p(x(t)) over the recorded samples."""
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    if len(traj.times) == 1:
        return 0.0
    p = np.array([traversability(grid, s) for s in traj.states])
    return float(np.trapz(p, traj.times))


def export_trajectory(traj: Trajectory, grid: TerrainGrid, stream) -> None:
    """Write one 't,x1,x2,u1,u2,p' line per sample."""
    for t, s, u in zip(traj.times, traj.states, traj.controls):
        p = traversability(grid, s)
        stream.write(
            f"{t:.12g},{s[0]:.12g},{s[1]:.12g},{u[0]:.12g},{u[1]:.12g},{p:.12g}\n"
        )
