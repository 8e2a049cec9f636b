"""Dense convex QP solver via operator splitting (ADMM) with adaptive penalty.

Solves
    minimize   (1/2) x' P x + q' x
    subject to G x <= h,  A x = b

for strictly convex P. Sized for the per-DOF weight problems of the
constrained-DMP pipeline (n of order 30-100, a few hundred to a few
thousand rows), so everything is dense and the reduced system
(P + sigma I + rho C'C) is factored once per penalty value.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .base import check_array
from .errors import IllPosedProblemError

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITERS = 20000
_SIGMA = 1e-6
_ALPHA = 1.6  # over-relaxation
_RHO_UPDATE_PERIOD = 50
_INFEAS_TOL = 1e-4
_INFEAS_SUSTAIN = 50


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class QpProblem:
    """Strictly convex QP data. G/h and A/b may be empty (shape (0, n))."""

    P: np.ndarray
    q: np.ndarray
    G: np.ndarray = None
    h: np.ndarray = None
    A: np.ndarray = None
    b: np.ndarray = None

    def __post_init__(self):
        p = check_array(self.P, "P", ndim=2)
        q = check_array(self.q, "q", ndim=1)
        n = q.size
        if p.shape != (n, n):
            raise ValueError(f"P must be ({n}, {n}), got {p.shape}")
        if np.max(np.abs(p - p.T)) > 1e-12 * max(1.0, np.max(np.abs(p))):
            raise ValueError("P must be symmetric")
        g = np.zeros((0, n)) if self.G is None else check_array(self.G, "G", ndim=2)
        h = np.zeros(0) if self.h is None else check_array(self.h, "h", ndim=1)
        a = np.zeros((0, n)) if self.A is None else check_array(self.A, "A", ndim=2)
        b = np.zeros(0) if self.b is None else check_array(self.b, "b", ndim=1)
        if g.shape != (h.size, n):
            raise ValueError("G/h dimensions inconsistent")
        if a.shape != (b.size, n):
            raise ValueError("A/b dimensions inconsistent")
        if b.size > n:
            raise ValueError("more equality constraints than variables")
        for name, val in (("P", p), ("q", q), ("G", g), ("h", h), ("A", a), ("b", b)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.q.size

    @property
    def m(self):
        return self.h.size

    @property
    def p(self):
        return self.b.size


@dataclass
class QpSolution:
    x: np.ndarray
    duals_ineq: np.ndarray
    duals_eq: np.ndarray
    status: QpStatus
    residuals: dict = field(default_factory=dict)
    iterations: int = 0


def _factor(p_mat, c, m, rho_ineq, rho_eq):
    n = p_mat.shape[0]
    rho = np.concatenate([np.full(m, rho_ineq), np.full(c.shape[0] - m, rho_eq)])
    k = p_mat + _SIGMA * np.eye(n) + (c.T * rho) @ c
    try:
        return scipy.linalg.cho_factor(k), rho
    except np.linalg.LinAlgError as exc:
        raise IllPosedProblemError(f"reduced KKT factorization failed: {exc}")


def _ruiz_scale(p_mat, q, c, iters=10):
    """Diagonal equilibration of the stacked [P; C] data plus cost scaling.

    Returns (d, e, cost) such that the scaled problem with P' = cost*D P D,
    q' = cost*D q, C' = E C D has rows and columns of roughly unit norm.
    """
    n = p_mat.shape[0]
    rows = c.shape[0]
    d = np.ones(n)
    e = np.ones(rows)
    for _ in range(iters):
        ps = (d[:, None] * p_mat) * d[None, :]
        cs = (e[:, None] * c) * d[None, :]
        col = np.max(np.abs(ps), axis=0)
        if rows:
            col = np.maximum(col, np.max(np.abs(cs), axis=0))
            row = np.max(np.abs(cs), axis=1)
            e /= np.sqrt(np.where(row > 1e-12, row, 1.0))
        d /= np.sqrt(np.where(col > 1e-12, col, 1.0))
    ps = (d[:, None] * p_mat) * d[None, :]
    col_norms = np.max(np.abs(ps), axis=0)
    denom = max(np.mean(col_norms), np.max(np.abs(d * q), initial=0.0), 1e-12)
    cost = float(np.clip(1.0 / denom, 1e-8, 1e8))
    return d, e, cost


def solve(problem, tolerance=DEFAULT_TOLERANCE, max_iters=DEFAULT_MAX_ITERS,
          warm_start=None):
    """ADMM iteration with over-relaxation and adaptive penalty.

    Constraints are handled as l <= Cx <= u with C = [G; A], where
    inequality rows have l = -inf and equality rows have l = u = b.

    Returns a :class:`QpSolution`; ``status`` is ``MAX_ITERS`` with the best
    iterate if the budget runs out, and ``INFEASIBLE`` when the divergence
    certificate triggers.
    """
    n, m, p = problem.n, problem.m, problem.p
    c_raw = np.vstack([problem.G, problem.A])

    d_vec, e_vec, cost = _ruiz_scale(problem.P, problem.q, c_raw)
    p_mat = cost * (d_vec[:, None] * problem.P) * d_vec[None, :]
    q_vec = cost * d_vec * problem.q
    c = (e_vec[:, None] * c_raw) * d_vec[None, :]
    lo = e_vec * np.concatenate([np.full(m, -np.inf), problem.b])
    up = e_vec * np.concatenate([problem.h, problem.b])

    rho = 0.1
    rho_eq_scale = 1e3  # equality rows get a stiffer penalty
    chol, rho_vec = _factor(p_mat, c, m, rho, rho * rho_eq_scale)

    if warm_start is not None:
        x = warm_start.x / d_vec
        y = cost * np.concatenate(
            [warm_start.duals_ineq, warm_start.duals_eq]
        ) / np.where(e_vec > 0, e_vec, 1.0)
        z = np.clip(c @ x, lo, up)
    else:
        x = np.zeros(n)
        y = np.zeros(m + p)
        z = np.zeros(m + p)

    r_prim = r_dual = np.inf
    infeas_count = 0
    for it in range(1, max_iters + 1):
        rhs = _SIGMA * x - q_vec + c.T @ (rho_vec * z - y)
        x_t = scipy.linalg.cho_solve(chol, rhs)
        cx_t = c @ x_t
        x_new = _ALPHA * x_t + (1 - _ALPHA) * x
        z_relax = _ALPHA * cx_t + (1 - _ALPHA) * z
        z = np.clip(z_relax + y / rho_vec, lo, up)
        y_prev = y
        y = y + rho_vec * (z_relax - z)
        x = x_new

        cx = c @ x
        r_prim = np.max(np.abs(cx - z)) if m + p else 0.0
        r_dual = np.max(np.abs(p_mat @ x + q_vec + c.T @ y))
        scale_prim = max(np.max(np.abs(cx), initial=0.0),
                         np.max(np.abs(z), initial=0.0), 1.0)
        scale_dual = max(np.max(np.abs(p_mat @ x)), np.max(np.abs(q_vec)),
                         np.max(np.abs(c.T @ y), initial=0.0), 1.0)
        if r_prim <= tolerance * scale_prim and r_dual <= tolerance * scale_dual:
            return _unscale_and_finish(
                problem, x, y, d_vec, e_vec, cost, QpStatus.OPTIMAL, it,
                tolerance,
            )

        # Primal infeasibility certificate: the dual step direction keeps
        # pushing while its support cost stays negative.
        dy = y - y_prev
        norm_dy = np.max(np.abs(dy)) if dy.size else 0.0
        if norm_dy > _INFEAS_TOL:
            support = float(
                up[np.isfinite(up)] @ np.maximum(dy[np.isfinite(up)], 0)
                + np.where(np.isfinite(lo), lo, 0.0) @ np.minimum(dy, 0)
            )
            atdy = np.max(np.abs(c.T @ dy))
            if atdy <= _INFEAS_TOL * norm_dy and support < -_INFEAS_TOL * norm_dy:
                infeas_count += 1
                if infeas_count >= _INFEAS_SUSTAIN:
                    return _unscale_and_finish(
                        problem, x, y, d_vec, e_vec, cost,
                        QpStatus.INFEASIBLE, it, tolerance,
                    )
            else:
                infeas_count = 0

        if it % _RHO_UPDATE_PERIOD == 0 and m + p:
            scale_p = r_prim / max(np.max(np.abs(cx)), np.max(np.abs(z)), 1e-12)
            scale_d = r_dual / max(
                np.max(np.abs(p_mat @ x)),
                np.max(np.abs(q_vec)),
                np.max(np.abs(c.T @ y)),
                1e-12,
            )
            ratio = np.sqrt(scale_p / max(scale_d, 1e-16))
            if ratio > 5 or ratio < 0.2:
                rho = float(np.clip(rho * ratio, 1e-8, 1e8))
                chol, rho_vec = _factor(p_mat, c, m, rho, rho * rho_eq_scale)

    return _unscale_and_finish(
        problem, x, y, d_vec, e_vec, cost, QpStatus.MAX_ITERS, max_iters,
        tolerance,
    )


def _unscale_and_finish(problem, x, y, d_vec, e_vec, cost, status, iterations,
                        tolerance):
    x = d_vec * x
    y = e_vec * y / cost
    if status == QpStatus.OPTIMAL:
        polished = _polish(problem, x, y, tolerance)
        if polished is not None:
            x, y = polished
    c = np.vstack([problem.G, problem.A])
    m = problem.m
    cx = c @ x
    up = np.concatenate([problem.h, problem.b])
    lo = np.concatenate([np.full(m, -np.inf), problem.b])
    r_prim = np.max(np.abs(cx - np.clip(cx, lo, up))) if cx.size else 0.0
    r_dual = np.max(np.abs(problem.P @ x + problem.q + c.T @ y))
    return _finish(problem, x, y, status, iterations, r_prim, r_dual)


def _polish(problem, x, y, tolerance):
    """Exact KKT solve on the active set detected from the ADMM duals.

    Recovers machine-precision stationarity from a first-order iterate, like
    the polishing pass of operator-splitting solvers. Returns (x, y) or None
    when the detected active set turns out inconsistent.
    """
    m, n = problem.m, problem.n
    y_scale = max(np.max(np.abs(y), initial=0.0), 1.0)
    slack = problem.h - problem.G @ x if m else np.zeros(0)
    active = np.nonzero(
        (y[:m] > 1e-8 * y_scale) | (slack < 1e-7 * max(1.0, np.max(np.abs(problem.h), initial=0.0)))
    )[0]
    ga = problem.G[active]
    a_all = np.vstack([ga, problem.A])
    na = a_all.shape[0]
    kkt = np.zeros((n + na, n + na))
    kkt[:n, :n] = problem.P
    kkt[:n, n:] = a_all.T
    kkt[n:, :n] = a_all
    kkt[n:, n:] = -1e-12 * np.eye(na)
    rhs = np.concatenate([-problem.q, problem.h[active], problem.b])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    x_new = sol[:n]
    lam = sol[n : n + active.size]
    nu = sol[n + active.size :]
    if active.size and np.min(lam) < -tolerance:
        return None
    if m and np.max(problem.G @ x_new - problem.h, initial=-np.inf) > tolerance:
        return None
    y_new = np.zeros(m + problem.p)
    y_new[active] = np.maximum(lam, 0.0)
    y_new[m:] = nu
    return x_new, y_new


def _finish(problem, x, y, status, iterations, r_prim, r_dual):
    m = problem.m
    mu = np.maximum(y[:m], 0.0)
    nu = y[m:]
    gap = float(np.max(np.abs(mu * (problem.G @ x - problem.h)))) if m else 0.0
    return QpSolution(
        x=x,
        duals_ineq=mu,
        duals_eq=nu,
        status=status,
        residuals={"primal": float(r_prim), "dual": float(r_dual), "gap": gap},
        iterations=iterations,
    )


def kkt_residuals(problem, candidate):
    """Stationarity, primal feasibility and complementary slackness norms."""
    x = candidate.x
    mu = candidate.duals_ineq
    nu = candidate.duals_eq
    stat = problem.P @ x + problem.q
    if problem.m:
        stat = stat + problem.G.T @ mu
    if problem.p:
        stat = stat + problem.A.T @ nu
    slack = problem.G @ x - problem.h if problem.m else np.zeros(0)
    primal = float(max(slack.max(initial=0.0), 0.0))
    if problem.p:
        primal = max(primal, float(np.max(np.abs(problem.A @ x - problem.b))))
    comp = float(np.max(np.abs(mu * slack))) if problem.m else 0.0
    return {
        "stationarity": float(np.max(np.abs(stat))),
        "primal": primal,
        "comp_slack": comp,
    }


def solve_active_set_enumeration(problem):
    """Brute-force reference: try every active set of the inequalities.

    Exponential in the number of inequality rows; only usable as a test
    oracle on tiny problems. Returns the unique KKT point.
    """
    from itertools import combinations

    n, m = problem.n, problem.m
    best = None
    # Active sets larger than the remaining degrees of freedom have linearly
    # dependent gradients; some subset of this size supports the optimum.
    k_max = min(m, n - problem.p)
    for k in range(k_max + 1):
        for active in combinations(range(m), k):
            ga = problem.G[list(active)]
            a_all = np.vstack([ga, problem.A])
            b_all = np.concatenate([problem.h[list(active)], problem.b])
            na = a_all.shape[0]
            kkt = np.zeros((n + na, n + na))
            kkt[:n, :n] = problem.P
            kkt[:n, n:] = a_all.T
            kkt[n:, :n] = a_all
            rhs = np.concatenate([-problem.q, b_all])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            scale = max(np.max(np.abs(rhs)), 1.0)
            if np.max(np.abs(kkt @ sol - rhs)) > 1e-8 * scale:
                continue  # singular active set slipped past the solver
            x = sol[:n]
            lam = sol[n : n + k]
            if np.any(lam < -1e-9):
                continue
            if m and np.any(problem.G @ x - problem.h > 1e-9):
                continue
            if problem.p and np.max(np.abs(problem.A @ x - problem.b)) > 1e-9:
                continue
            obj = 0.5 * x @ problem.P @ x + problem.q @ x
            if best is None or obj < best[0] - 1e-12:
                mu = np.zeros(m)
                mu[list(active)] = lam
                best = (obj, x, mu, sol[n + k :])
    if best is None:
        return None
    return QpSolution(
        x=best[1],
        duals_ineq=best[2],
        duals_eq=best[3],
        status=QpStatus.OPTIMAL,
        residuals={},
        iterations=0,
    )
