"""Dense linear programming: standard form container and an embedded solver.

The solver is a primal-dual path-following interior-point method on the
homogeneous self-dual embedding (Andersen & Andersen's formulation with
Mehrotra predictor-corrector steps). It is dense and single-threaded, sized
for problems up to a few thousand variables, and certifies optimality,
infeasibility, and unboundedness through the tau/kappa variables of the
embedding. Solver instances share no state; concurrent solves are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["LPStandardForm", "LPSolution", "solve_lp", "dump_lp"]


@dataclass(frozen=True)
class LPStandardForm:
    """min c.v  s.t.  A_eq v = b_eq,  A_ineq v >= b_ineq,  v >= lower.

    lower holds per-variable lower bounds, each either 0 or -inf; there are
    no upper bounds. All entries must be finite (the bounds may be -inf).
    """

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = len(c)
        A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        A_ineq = np.asarray(self.A_ineq, dtype=float).reshape(-1, n)
        b_ineq = np.atleast_1d(np.asarray(self.b_ineq, dtype=float))
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        if A_eq.shape[0] != len(b_eq) or A_ineq.shape[0] != len(b_ineq) or len(lower) != n:
            raise ValueError("inconsistent LP dimensions")
        for name, arr in (("c", c), ("A_eq", A_eq), ("b_eq", b_eq), ("A_ineq", A_ineq), ("b_ineq", b_ineq)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains NaN or infinite entries")
        if not np.all((lower == 0.0) | np.isneginf(lower)):
            raise ValueError("lower bounds must be 0 or -inf")
        for name, arr in (("c", c), ("A_eq", A_eq), ("b_eq", b_eq), ("A_ineq", A_ineq), ("b_ineq", b_ineq), ("lower", lower)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class LPSolution:
    """Solver output; primal/duals are in the original variable space.

    For status "optimal" the primal satisfies the residual and gap bounds of
    the termination tolerance. For "infeasible"/"unbounded" the duals carry
    the (unscaled) certificate direction; for "iteration-limit" the best
    iterate reached is attached.
    """

    primal: np.ndarray
    dual_eq: np.ndarray
    dual_ineq: np.ndarray
    status: str
    gap: float
    objective: float
    iterations: int


def _to_equality_form(lp: LPStandardForm):
    """Rewrite as min c.x, A x = b, x >= 0.

    Free variables are split into positive and negative parts; each
    inequality row gains a slack column. Returns (A, b, c, recover) where
    recover maps a standard-form point back to the original variables.
    """
    n = lp.n_vars
    k = len(lp.b_eq)
    free = np.isneginf(lp.lower)
    n_free = int(free.sum())
    l = len(lp.b_ineq)

    G = np.vstack([lp.A_eq, lp.A_ineq])  # (k + l, n)
    cols = [G, -G[:, free]]
    if l:
        slack = np.zeros((k + l, l))
        slack[k:, :] = -np.eye(l)
        cols.append(slack)
    A = np.hstack(cols)
    b = np.concatenate([lp.b_eq, lp.b_ineq])
    c = np.concatenate([lp.c, -lp.c[free], np.zeros(l)])

    def recover(x_std: np.ndarray) -> np.ndarray:
        v = x_std[:n].copy()
        v[free] -= x_std[n : n + n_free]
        return v

    return A, b, c, recover


def _factor(M: np.ndarray):
    """Robust solve callable for the (symmetric positive) normal matrix.

    Cholesky first; on breakdown fall back to a general solve, then to
    least squares, which tolerates the rank deficiency that appears as the
    central path approaches a degenerate face.
    """
    if M.shape[0] == 0:
        return lambda r: np.zeros(0)
    try:
        cho = scipy.linalg.cho_factor(M, check_finite=False)
        return lambda r: scipy.linalg.cho_solve(cho, r, check_finite=False)
    except scipy.linalg.LinAlgError:
        pass
    try:
        lu = scipy.linalg.lu_factor(M, check_finite=False)
        sol = lambda r: scipy.linalg.lu_solve(lu, r, check_finite=False)
        probe = sol(np.ones(M.shape[0]))
        if np.all(np.isfinite(probe)):
            return sol
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    return lambda r: np.linalg.lstsq(M, r, rcond=None)[0]


def _step_length(x, d_x, z, d_z, tau, d_tau, kappa, d_kappa, scale):
    """Largest multiple of the direction keeping (x, z, tau, kappa) positive."""
    alpha = 1.0
    for val, dval in ((tau, d_tau), (kappa, d_kappa)):
        if dval < 0:
            alpha = min(alpha, scale * val / -dval)
    for vec, dvec in ((x, d_x), (z, d_z)):
        neg = dvec < 0
        if np.any(neg):
            alpha = min(alpha, scale * np.min(vec[neg] / -dvec[neg]))
    return alpha


def _hsd_solve(A, b, c, tol, max_iter):
    """Homogeneous self-dual interior point on min c.x, Ax = b, x >= 0.

    Returns (x, y, z, tau, kappa, status, iterations). Status is 0 optimal,
    1 iteration limit, 2 infeasible, 3 unbounded.
    """
    m, n = A.shape
    x = np.ones(n)
    y = np.zeros(m)
    z = np.ones(n)
    tau, kappa = 1.0, 1.0

    norm_rp0 = max(1.0, np.linalg.norm(b - A @ x))
    norm_rd0 = max(1.0, np.linalg.norm(c - z))
    norm_rg0 = max(1.0, abs(1.0 + c @ x))
    mu0 = (x @ z + tau * kappa) / (n + 1)

    status = 1
    it = 0
    for it in range(1, max_iter + 1):
        r_p = b * tau - A @ x
        r_d = c * tau - A.T @ y - z
        r_g = kappa + c @ x - b @ y
        mu = (x @ z + tau * kappa) / (n + 1)

        rho_p = np.linalg.norm(r_p) / norm_rp0
        rho_d = np.linalg.norm(r_d) / norm_rd0
        rho_g = abs(r_g) / norm_rg0
        rho_A = abs(c @ x - b @ y) / (tau + abs(b @ y))
        rho_mu = mu / mu0

        if rho_p <= tol and rho_d <= tol and rho_A <= tol:
            status = 0
            break
        inf1 = rho_p <= tol and rho_d <= tol and rho_g <= tol and tau <= tol * max(1.0, kappa)
        inf2 = rho_mu <= tol and tau <= tol * min(1.0, kappa)
        if inf1 or inf2:
            status = 2 if b @ y > tol else 3
            break

        # normal-equation matrix for this iterate
        d = x / z
        M = (A * d) @ A.T
        solve = _factor(M)

        def directions(gamma, eta, d_x_aff=None, d_z_aff=None, d_tau_aff=0.0, d_kappa_aff=0.0):
            rhat_p = eta * r_p
            rhat_d = eta * r_d
            rhat_g = eta * r_g
            rhat_xs = gamma * mu - x * z
            rhat_tk = gamma * mu - tau * kappa
            if d_x_aff is not None:
                rhat_xs = rhat_xs - d_x_aff * d_z_aff
                rhat_tk = rhat_tk - d_tau_aff * d_kappa_aff

            def sym_solve(r1, r2):
                v = solve(r2 + A @ (d * r1))
                u = d * (A.T @ v - r1)
                return u, v

            p, q = sym_solve(c, b)
            u, v = sym_solve(rhat_d - rhat_xs / x, rhat_p)
            denom = kappa / tau + (-c @ p + b @ q)
            d_tau = (rhat_g + rhat_tk / tau - (-c @ u + b @ v)) / denom
            d_x = u + p * d_tau
            d_y = v + q * d_tau
            d_z = (rhat_xs - z * d_x) / x
            d_kappa = (rhat_tk - kappa * d_tau) / tau
            return d_x, d_y, d_z, d_tau, d_kappa

        try:
            # predictor (affine scaling), then Mehrotra corrector
            d_x, d_y, d_z, d_tau, d_kappa = directions(0.0, 1.0)
            alpha_aff = _step_length(x, d_x, z, d_z, tau, d_tau, kappa, d_kappa, 1.0)
            gamma = (1.0 - alpha_aff) ** 2 * min(0.1, 1.0 - alpha_aff)
            d_x, d_y, d_z, d_tau, d_kappa = directions(
                gamma, 1.0 - gamma, d_x, d_z, d_tau, d_kappa
            )
        except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError):
            status = 1
            break
        if not all(np.all(np.isfinite(v)) for v in (d_x, d_y, d_z)) or not np.isfinite(d_tau) or not np.isfinite(d_kappa):
            status = 1
            break

        alpha = _step_length(x, d_x, z, d_z, tau, d_tau, kappa, d_kappa, 0.99995)
        x = x + alpha * d_x
        y = y + alpha * d_y
        z = z + alpha * d_z
        tau = tau + alpha * d_tau
        kappa = kappa + alpha * d_kappa

    return x, y, z, tau, kappa, status, it


def solve_lp(lp: LPStandardForm, tol: float = 1e-8, max_iter: int = 200) -> LPSolution:
    """Solve an LPStandardForm; never raises on infeasible/unbounded inputs.

    tol bounds the relative primal/dual residuals and the relative duality
    gap at an "optimal" exit. After max_iter iterations the best iterate is
    returned with status "iteration-limit".
    """
    A, b, c, recover = _to_equality_form(lp)
    x, y, z, tau, kappa, code, iters = _hsd_solve(A, b, c, tol, max_iter)

    k = len(lp.b_eq)
    if code in (0, 1):
        scale = tau if tau > 0 else 1.0
        x_hat = x / scale
        y_hat = y / scale
        primal = recover(x_hat)
        obj = float(lp.c @ primal)
        gap = abs(c @ x_hat - b @ y_hat) / (1.0 + abs(c @ x_hat))
        status = "optimal" if code == 0 else "iteration-limit"
    else:
        # certificate direction: do not rescale by the vanishing tau
        primal = recover(x)
        y_hat = y
        obj = float("nan")
        gap = float("inf")
        status = "infeasible" if code == 2 else "unbounded"
    return LPSolution(
        primal=primal,
        dual_eq=y_hat[:k],
        dual_ineq=y_hat[k:],
        status=status,
        gap=float(gap),
        objective=obj,
        iterations=iters,
    )


def dump_lp(lp: LPStandardForm, stream) -> None:
    """Write the plain-text standard form: COST, EQ, INEQ, BOUNDS sections.

    One row per line, space separated; EQ/INEQ rows carry the right-hand
    side as the last entry; BOUNDS holds one lower bound per variable.
    """

    def fmt(values):
        return " ".join(format(v, ".17g") for v in values)

    stream.write("COST\n")
    stream.write(fmt(lp.c) + "\n")
    stream.write("EQ\n")
    for row, rhs in zip(lp.A_eq, lp.b_eq):
        stream.write(fmt(row) + " " + format(rhs, ".17g") + "\n")
    stream.write("INEQ\n")
    for row, rhs in zip(lp.A_ineq, lp.b_ineq):
        stream.write(fmt(row) + " " + format(rhs, ".17g") + "\n")
    stream.write("BOUNDS\n")
    stream.write(" ".join("0" if lo == 0 else "-inf" for lo in lp.lower) + "\n")
