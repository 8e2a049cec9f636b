"""Constrained trajectory generation from a fitted DMP under box limits.

Three methods with different trade-offs:

- ``constrain_tau``: uniform slowdown. Finds the smallest time-constant
  scale whose rollout satisfies all limits (velocity scales as 1/s,
  acceleration as 1/s^2, the path is unchanged).
- ``constrain_tc``: temporal coupling. Integrates with a time-varying
  tau(t) >= tau0 that grows via a soft barrier as velocities or predicted
  accelerations approach their limits, and relaxes back when clear. A hard
  per-step clamp on the effective tau guarantees velocity limits at every
  output sample; acceleration limits are only encouraged (tune gamma_a).
- ``constrain_opt``: weight optimization. Positions, velocities and
  accelerations are affine in the kernel weights, so box limits on a time
  grid become a QP per DOF; duration is unchanged and each DOF slows only
  where it must.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qp
from .base import check_array, check_positive
from .dmp import OVERTIME, _rk4_step_operators, rollout
from .errors import (
    IntegrationDivergenceError,
    InfeasibleQpError,
    UnsatisfiableBySlowdownError,
)
from .trajectory import Trajectory

_BARRIER_ONSET = 0.9  # soft barrier activates at this fraction of a limit
_TAU_SEARCH_RTOL = 1e-3
_MAX_TAU_SCALE = 2.0**20
_MAX_GRID_REFINEMENTS = 3
_MAX_BOUND_BACKOFFS = 6


@dataclass(frozen=True)
class KinematicLimits:
    """Per-DOF box limits on position, velocity and acceleration.

    Effective limits are ``margin`` times the nominal values. Velocity and
    acceleration bounds must straddle zero (the motion starts and ends at
    rest).
    """

    q_lo: np.ndarray
    q_hi: np.ndarray
    v_lo: np.ndarray
    v_hi: np.ndarray
    a_lo: np.ndarray
    a_hi: np.ndarray
    margin: float = 0.98

    def __post_init__(self):
        d = np.asarray(self.q_lo, dtype=float).size
        for name in ("q_lo", "q_hi", "v_lo", "v_hi", "a_lo", "a_hi"):
            arr = check_array(getattr(self, name), name, ndim=1, shape=(d,))
            object.__setattr__(self, name, arr)
        for lo, hi in (("q_lo", "q_hi"), ("v_lo", "v_hi"), ("a_lo", "a_hi")):
            if np.any(getattr(self, lo) >= getattr(self, hi)):
                raise ValueError(f"{lo} must be < {hi} componentwise")
        for name in ("v_lo", "a_lo"):
            if np.any(getattr(self, name) >= 0):
                raise ValueError(f"{name} must be negative componentwise")
        for name in ("v_hi", "a_hi"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be positive componentwise")
        if not 0 < self.margin <= 1:
            raise ValueError(f"margin must be in (0, 1], got {self.margin}")

    @property
    def dof_count(self):
        return self.q_lo.size

    @classmethod
    def symmetric(cls, position, velocity, acceleration, margin=0.98):
        """Limits of the form [-p, p], [-v, v], [-a, a] per DOF."""
        p = np.atleast_1d(np.asarray(position, dtype=float))
        v = np.atleast_1d(np.asarray(velocity, dtype=float))
        a = np.atleast_1d(np.asarray(acceleration, dtype=float))
        d = max(p.size, v.size, a.size)
        p, v, a = (np.broadcast_to(x, (d,)).copy() for x in (p, v, a))
        return cls(q_lo=-p, q_hi=p, v_lo=-v, v_hi=v, a_lo=-a, a_hi=a,
                   margin=margin)

    def effective(self):
        """The six bound arrays scaled by the margin."""
        m = self.margin
        return (m * self.q_lo, m * self.q_hi, m * self.v_lo, m * self.v_hi,
                m * self.a_lo, m * self.a_hi)


@dataclass(frozen=True)
class TcConfig:
    """Temporal-coupling parameters.

    gamma_a trades limit avoidance against slowdown; gamma_r is the rate
    (1/s) at which tau relaxes back toward its nominal value; horizon is
    the number of lookahead steps for the predicted acceleration.
    """

    gamma_a: float = 10.0
    gamma_r: float = 1.0
    horizon: int = 5

    def __post_init__(self):
        if self.gamma_a < 0:
            raise ValueError(f"gamma_a must be >= 0, got {self.gamma_a}")
        check_positive(self.gamma_r, "gamma_r")
        if not isinstance(self.horizon, (int, np.integer)) or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")


@dataclass(frozen=True)
class OptDmpConfig:
    """Weight-optimization parameters.

    lambda_mode selects whether the objective tracks position or velocity
    samples; grid_count sets the number of constraint time points.
    """

    lambda_mode: str = "position"
    grid_count: int = 100
    qp_tolerance: float = 1e-6
    boundary_equalities: bool = True

    def __post_init__(self):
        if self.lambda_mode not in ("position", "velocity"):
            raise ValueError(
                f"lambda_mode must be 'position' or 'velocity', got {self.lambda_mode!r}"
            )
        if self.grid_count < 10:
            raise ValueError(f"grid_count must be >= 10, got {self.grid_count}")
        check_positive(self.qp_tolerance, "qp_tolerance")


@dataclass(frozen=True)
class ConstrainedResult:
    trajectory: Trajectory
    method: str
    tau_final: float
    violation_report: dict
    solver_stats: dict = field(default_factory=dict)

    def max_excess(self, include=("position", "velocity", "acceleration")):
        return float(max(np.max(self.violation_report[k]) for k in include))


def violation_report(trajectory, limits):
    """Per-DOF max excess of the trajectory over each effective limit."""
    q_lo, q_hi, v_lo, v_hi, a_lo, a_hi = limits.effective()

    def excess(values, lo, hi):
        over = np.maximum(values - hi[:, None], 0.0)
        under = np.maximum(lo[:, None] - values, 0.0)
        return np.maximum(over, under).max(axis=1)

    return {
        "position": excess(trajectory.pos, q_lo, q_hi),
        "velocity": excess(trajectory.vel, v_lo, v_hi),
        "acceleration": excess(trajectory.acc, a_lo, a_hi),
    }


# ---------------------------------------------------------------------------
# Uniform slowdown


def constrain_tau(model, limits, dt):
    """Smallest uniform slowdown whose rollout satisfies all limits.

    Brackets the scale by geometric doubling, then bisects to 1e-3 relative
    tolerance. Position violations cannot be fixed by slowing down, so a
    position excess in the base rollout raises
    :class:`UnsatisfiableBySlowdownError`.
    """
    _check_dofs(model, limits)
    tau0 = model.tau

    def attempt(scale):
        traj = rollout(model, dt, tau_override=scale * tau0)
        rep = violation_report(traj, limits)
        return traj, rep

    traj, rep = attempt(1.0)
    if np.max(rep["position"]) > 0:
        worst = int(np.argmax(rep["position"]))
        raise UnsatisfiableBySlowdownError(
            f"position limit exceeded by {rep['position'][worst]:.3g} on DOF "
            f"{worst}; slowing down cannot repair position bounds"
        )
    if _dyn_excess(rep) <= 0:
        return ConstrainedResult(
            trajectory=traj, method="tau", tau_final=tau0,
            violation_report=rep, solver_stats={"scale": 1.0, "rollouts": 1},
        )

    lo, hi = 1.0, 2.0
    rollouts = 1
    traj, rep = attempt(hi)
    rollouts += 1
    while _dyn_excess(rep) > 0:
        lo, hi = hi, hi * 2
        if hi > _MAX_TAU_SCALE:
            raise UnsatisfiableBySlowdownError(
                f"no satisfying slowdown found up to scale {_MAX_TAU_SCALE:g}"
            )
        traj, rep = attempt(hi)
        rollouts += 1

    best = (traj, rep, hi)
    while (hi - lo) > _TAU_SEARCH_RTOL * hi:
        mid = 0.5 * (lo + hi)
        traj, rep = attempt(mid)
        rollouts += 1
        if _dyn_excess(rep) > 0:
            lo = mid
        else:
            hi = mid
            best = (traj, rep, mid)

    traj, rep, scale = best
    return ConstrainedResult(
        trajectory=traj, method="tau", tau_final=scale * tau0,
        violation_report=rep, solver_stats={"scale": scale, "rollouts": rollouts},
    )


def _dyn_excess(report):
    return max(np.max(report["velocity"]), np.max(report["acceleration"]))


def _check_dofs(model, limits):
    if limits.dof_count != model.dof_count:
        raise ValueError(
            f"limits have {limits.dof_count} DOFs, model has {model.dof_count}"
        )


# ---------------------------------------------------------------------------
# Temporal coupling


def constrain_tc(model, limits, cfg, dt):
    """Integrate with a time-varying tau grown near limits.

    tau follows d(tau)/dt = gamma_r*(tau0 - tau) + gamma_a * sum over DOFs of
    barrier(velocity fraction) + barrier(predicted acceleration fraction),
    with barrier(u) = max(0, u - 0.9)^2 activating at 90% of the effective
    limit. On top of that, the effective tau used by the dynamics is clamped
    each evaluation so output velocities never exceed their limits; the
    acceleration guarantee is left to gamma_a (see :func:`tune_gamma_a`).
    """
    _check_dofs(model, limits)
    check_positive(dt, "dt")
    tau0 = model.tau
    if dt > tau0 / 50:
        raise ValueError(f"dt={dt} too coarse for tau={tau0}; need dt <= tau/50")
    _, _, v_lo, v_hi, a_lo, a_hi = limits.effective()
    alpha_z, beta_z, alpha_x = model.alpha_z, model.beta_z, model.canonical.alpha_x
    g = model.goal

    def tau_eff(z, tau_s):
        needed = max(np.max(z / v_hi), np.max(z / v_lo), 0.0)
        return max(tau_s, needed)

    def forcing(x):
        return model.forcing(x)

    def derivs(x, y, z, tau_s):
        te = tau_eff(z, tau_s)
        f = forcing(x)
        ydot = z / te
        zdot = alpha_z * (beta_z * (g - y) - z) + f
        acc = zdot / te**2
        # Lookahead: one Euler jump of horizon steps at frozen tau.
        h = cfg.horizon * dt
        x2 = x + h * (-alpha_x * x / te)
        y2 = y + h * ydot
        z2 = z + h * zdot / te
        acc2 = (alpha_z * (beta_z * (g - y2) - z2) + forcing(max(x2, 0.0))) / te**2
        # The barrier watches the velocity the relaxed tau would produce, so
        # it keeps reacting (and growing tau) even while the clamp is the
        # thing actually holding the output at the limit.
        vel_free = z / tau_s
        frac_v = np.maximum(vel_free / v_hi, vel_free / v_lo)
        frac_a = np.maximum(acc2 / a_hi, acc2 / a_lo)
        barrier = np.maximum(frac_v - _BARRIER_ONSET, 0.0) ** 2
        barrier += np.maximum(frac_a - _BARRIER_ONSET, 0.0) ** 2
        tau_dot = cfg.gamma_r * (tau0 - tau_s) + cfg.gamma_a * float(barrier.sum())
        # Changing tau itself accelerates the output (vel = z / tau), so cap
        # the rate at 90% of the acceleration headroom it would consume.
        a_room = np.minimum(a_hi, -a_lo)
        cap = _BARRIER_ONSET * te**2 * float(
            np.min(a_room / np.maximum(np.abs(z), 1e-12))
        )
        tau_dot = float(np.clip(tau_dot, -cap, cap))
        return -alpha_x * x / te, ydot, zdot / te, tau_dot, acc

    x_floor = np.exp(-alpha_x * OVERTIME)
    max_steps = int(np.ceil(OVERTIME * tau0 * 200 / dt))
    x = 1.0
    y = model.start.copy()
    z = np.zeros(model.dof_count)
    # The acceleration at t=0 is known in closed form and scales as 1/tau^2,
    # so start tau high enough to keep it at the barrier onset; the
    # relaxation term brings tau back down as the transient passes.
    zdot0 = alpha_z * beta_z * (g - y) + model.forcing(1.0)
    a_room = _BARRIER_ONSET * np.minimum(a_hi, -a_lo)
    tau_s = tau0 * float(np.sqrt(max(1.0, np.max(np.abs(zdot0) / a_room / tau0**2))))
    ts, ys, vs = [0.0], [y.copy()], [np.zeros(model.dof_count)]
    taus = [tau0]
    step = 0
    while x > x_floor:
        if step >= max_steps:
            raise IntegrationDivergenceError(
                step, f"tau coupling did not let the phase finish in {max_steps} steps"
            )
        k1 = derivs(x, y, z, tau_s)
        k2 = derivs(x + dt / 2 * k1[0], y + dt / 2 * k1[1], z + dt / 2 * k1[2],
                    tau_s + dt / 2 * k1[3])
        k3 = derivs(x + dt / 2 * k2[0], y + dt / 2 * k2[1], z + dt / 2 * k2[2],
                    tau_s + dt / 2 * k2[3])
        k4 = derivs(x + dt * k3[0], y + dt * k3[1], z + dt * k3[2],
                    tau_s + dt * k3[3])
        x += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y = y + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        z = z + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        tau_s += dt / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        tau_s = max(tau_s, tau0)
        step += 1
        if not (np.isfinite(x) and np.isfinite(tau_s)
                and np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
            raise IntegrationDivergenceError(step)
        ts.append(step * dt)
        ys.append(y.copy())
        vs.append(z / tau_eff(z, tau_s))
        taus.append(tau_s)

    t = np.asarray(ts)
    pos = np.asarray(ys).T
    vel = np.asarray(vs).T
    acc = np.gradient(vel, dt, axis=1)
    traj = Trajectory(t=t, pos=pos, vel=vel, acc=acc)
    rep = violation_report(traj, limits)
    return ConstrainedResult(
        trajectory=traj, method="tc", tau_final=float(taus[-1]),
        violation_report=rep,
        solver_stats={"tau_max": float(np.max(taus)), "steps": step,
                      "gamma_a": cfg.gamma_a},
    )


def tune_gamma_a(model, limits, cfg, dt, max_doublings=20, tolerance=1e-6):
    """Sweep gamma_a upward (doubling) until the rollout is violation-free.

    Returns the first violation-free :class:`ConstrainedResult`. Raises
    :class:`UnsatisfiableBySlowdownError` if no gain within the sweep
    eliminates the violations.
    """
    gamma = cfg.gamma_a if cfg.gamma_a > 0 else 1.0
    for _ in range(max_doublings + 1):
        trial = TcConfig(gamma_a=gamma, gamma_r=cfg.gamma_r, horizon=cfg.horizon)
        result = constrain_tc(model, limits, trial, dt)
        if result.max_excess() <= tolerance:
            return result
        gamma *= 2
    raise UnsatisfiableBySlowdownError(
        f"gamma_a sweep up to {gamma / 2:g} left excess "
        f"{result.max_excess():.3g}"
    )


# ---------------------------------------------------------------------------
# Weight optimization


def build_affine_maps(model, grid, dt=None):
    """Affine dependence of the rollout on the kernel weights.

    Returns a list with one dict per DOF holding ``Phi_pos``, ``Phi_vel``,
    ``Phi_acc`` (len(grid) x H) and ``c_pos``, ``c_vel``, ``c_acc``
    (len(grid),) such that e.g. position at grid time t_k for weights w is
    ``Phi_pos[k] @ w + c_pos[k]``.

    Built by superposition: the (y, z) subsystem is linear in the forcing
    input, so one zero-forcing goal-step response plus one unit response per
    kernel (shared across DOFs, scaled by each DOF's amplitude) determine the
    whole map. The responses are integrated with the same fixed-step
    recurrence as :func:`dmpbag.dmp.rollout` and linearly interpolated to the
    grid times.
    """
    grid = check_array(grid, "grid", ndim=1)
    tau = model.tau
    if dt is None:
        dt = tau / 200
    horizon = OVERTIME * tau
    if np.any(grid < 0) or np.any(grid > horizon + dt):
        raise ValueError(f"grid times must lie within [0, {horizon:.6g}]")

    n = int(np.ceil(horizon / dt))
    h_count = model.kernels.count
    alpha_z, beta_z = model.alpha_z, model.beta_z

    t_half = np.arange(2 * n + 1) * (dt / 2)
    x_half = model.canonical.phase(t_half)
    mix = model.kernels.normalized(x_half)  # (2n+1, H)

    # Inputs b(t): columns 0..H-1 are unit kernel forcings, column H is the
    # goal-step drive for a unit start-to-goal displacement.
    b = np.empty((2 * n + 1, h_count + 1))
    b[:, :h_count] = mix * x_half[:, None] / tau
    b[:, h_count] = alpha_z * beta_z / tau

    r, s0, s1, s2 = _rk4_step_operators(alpha_z, beta_z, tau, dt)
    u = np.zeros((n + 1, 2, h_count + 1))
    cur = u[0]
    for k in range(n):
        cur = (r @ cur + np.outer(s0, b[2 * k]) + np.outer(s1, b[2 * k + 1])
               + np.outer(s2, b[2 * k + 2]))
        u[k + 1] = cur

    y_resp = u[:, 0, :]  # (n+1, H+1)
    z_resp = u[:, 1, :]
    f_full = mix[::2] * x_half[::2, None]  # unit forcing values at full steps
    zdot_unit = (-alpha_z * beta_z * y_resp[:, :h_count]
                 - alpha_z * z_resp[:, :h_count] + f_full) / tau
    zdot_step = (alpha_z * (beta_z * (1.0 - y_resp[:, h_count])
                            - z_resp[:, h_count])) / tau

    t_full = np.arange(n + 1) * dt
    amp = model.amplitude()
    disp = model.goal - model.start

    def interp_cols(table):
        return np.column_stack(
            [np.interp(grid, t_full, table[:, j]) for j in range(table.shape[1])]
        )

    unit_pos = interp_cols(y_resp[:, :h_count])
    unit_vel = interp_cols(z_resp[:, :h_count]) / tau
    unit_acc = interp_cols(zdot_unit) / tau
    step_pos = np.interp(grid, t_full, y_resp[:, h_count])
    step_vel = np.interp(grid, t_full, z_resp[:, h_count]) / tau
    step_acc = np.interp(grid, t_full, zdot_step) / tau

    maps = []
    for d in range(model.dof_count):
        maps.append({
            "Phi_pos": amp[d] * unit_pos,
            "Phi_vel": amp[d] * unit_vel,
            "Phi_acc": amp[d] * unit_acc,
            "c_pos": model.start[d] + disp[d] * step_pos,
            "c_vel": disp[d] * step_vel,
            "c_acc": disp[d] * step_acc,
        })
    return maps


def constrain_opt(model, limits, cfg, dt):
    """Replace the kernel weights with QP solutions meeting the box limits.

    One strictly convex QP per DOF: the objective tracks the fitted model's
    own rollout samples (position or velocity, per ``lambda_mode``), the
    inequalities impose the effective limits at grid times, and optional
    equalities pin the final position to the goal and the final velocity to
    zero (the initial conditions hold by construction: every basis response
    starts at rest, so the t=0 rows are identically satisfied).

    The returned rollout is checked densely at dt; if it exceeds the limits
    by more than qp_tolerance the grid is doubled and re-solved (up to 3
    times), then the offending bounds are tightened by 1.2x the observed
    excess and re-solved (bound back-off) until the dense check passes.
    """
    _check_dofs(model, limits)
    check_positive(dt, "dt")
    tau = model.tau
    base = rollout(model, dt)
    n_full = base.n_samples
    maps_full = build_affine_maps(model, base.t, dt=dt)
    q_lo, q_hi, v_lo, v_hi, a_lo, a_hi = limits.effective()

    grid_count = cfg.grid_count
    shrink = {"v_lo": v_lo.copy(), "v_hi": v_hi.copy(),
              "a_lo": a_lo.copy(), "a_hi": a_hi.copy(),
              "q_lo": q_lo.copy(), "q_hi": q_hi.copy()}
    stats = {"refinements": 0, "backoffs": 0, "iterations": 0, "qp_solves": 0}
    refinements = 0
    backoffs = 0
    while True:
        idx = np.unique(np.round(
            np.linspace(0, n_full - 1, min(grid_count, n_full))).astype(int))
        weights = np.array(model.weights, copy=True)
        for d in range(model.dof_count):
            if d in model.degenerate_dofs or model.amplitude()[d] == 0.0:
                _check_static_dof(model, d, shrink, cfg)
                continue
            weights[d] = _solve_dof(model, d, maps_full, idx, shrink, cfg, stats)
        candidate = model.with_weights(weights)
        traj = rollout(candidate, dt)
        rep = violation_report(traj, limits)
        worst = max(np.max(rep[k]) for k in rep)
        if worst <= cfg.qp_tolerance:
            break
        if refinements < _MAX_GRID_REFINEMENTS:
            grid_count *= 2
            refinements += 1
            continue
        if backoffs >= _MAX_BOUND_BACKOFFS:
            raise InfeasibleQpError(
                f"dense limit excess {worst:.3g} would not shrink below "
                f"{cfg.qp_tolerance:g} after bound back-off"
            )
        _tighten_bounds(shrink, traj, rep)
        backoffs += 1

    stats.update(refinements=refinements, backoffs=backoffs,
                 grid_count=int(idx.size))
    return ConstrainedResult(
        trajectory=traj, method="opt", tau_final=tau,
        violation_report=rep, solver_stats=stats,
    )


def _check_static_dof(model, d, bounds, cfg):
    y0 = model.start[d]
    if y0 > bounds["q_hi"][d] + cfg.qp_tolerance or \
            y0 < bounds["q_lo"][d] - cfg.qp_tolerance:
        raise InfeasibleQpError(
            f"DOF {d} rests at {y0:.6g}, outside its position bounds",
            violated=[("position", d)],
        )


def _solve_dof(model, d, maps_full, idx, bounds, cfg, stats):
    m = maps_full[d]
    pp, pv, pa = m["Phi_pos"][idx], m["Phi_vel"][idx], m["Phi_acc"][idx]
    cp, cv, ca = m["c_pos"][idx], m["c_vel"][idx], m["c_acc"][idx]
    w_fit = model.weights[d]

    if cfg.lambda_mode == "position":
        phi_obj, c_obj = pp, cp
    else:
        phi_obj, c_obj = pv, cv
    target = phi_obj @ w_fit  # track the fitted model's own samples
    h_count = w_fit.size
    # Small ridge toward the fitted weights keeps the problem strictly
    # convex without biasing the slack-limit optimum away from the fit.
    p_mat = phi_obj.T @ phi_obj + 2e-8 * np.eye(h_count)
    q_vec = -phi_obj.T @ target - 2e-8 * w_fit

    g_mat = np.vstack([pp, -pp, pv, -pv, pa, -pa])
    h_vec = np.concatenate([
        bounds["q_hi"][d] - cp, cp - bounds["q_lo"][d],
        bounds["v_hi"][d] - cv, cv - bounds["v_lo"][d],
        bounds["a_hi"][d] - ca, ca - bounds["a_lo"][d],
    ])
    if cfg.boundary_equalities:
        last = -1
        a_mat = np.vstack([m["Phi_pos"][last], m["Phi_vel"][last]])
        b_vec = np.array([model.goal[d] - m["c_pos"][last], -m["c_vel"][last]])
    else:
        a_mat = b_vec = None

    problem = qp.QpProblem(P=p_mat, q=q_vec, G=g_mat, h=h_vec, A=a_mat, b=b_vec)
    sol = qp.solve(problem, tolerance=0.1 * cfg.qp_tolerance)
    stats["qp_solves"] += 1
    stats["iterations"] += sol.iterations
    if sol.status == qp.QpStatus.INFEASIBLE:
        raise InfeasibleQpError(
            f"limits admit no weight vector for DOF {d}",
            violated=_first_violations(problem, sol, idx),
        )
    if sol.status != qp.QpStatus.OPTIMAL:
        raise InfeasibleQpError(
            f"QP for DOF {d} did not converge (status {sol.status.value})"
        )
    return sol.x


def _first_violations(problem, sol, idx):
    slack = problem.G @ sol.x - problem.h
    rows = np.nonzero(slack > 0)[0]
    kinds = ("position+", "position-", "velocity+", "velocity-",
             "acceleration+", "acceleration-")
    block = idx.size
    return [(kinds[r // block], int(idx[r % block]), float(slack[r]))
            for r in rows[:5]]


def _tighten_bounds(bounds, traj, report):
    for kind, values, lo, hi in (
        ("position", traj.pos, "q_lo", "q_hi"),
        ("velocity", traj.vel, "v_lo", "v_hi"),
        ("acceleration", traj.acc, "a_lo", "a_hi"),
    ):
        excess = report[kind]
        for d in np.nonzero(excess > 0)[0]:
            step = 1.2 * excess[d]
            if np.max(values[d]) > bounds[hi][d]:
                bounds[hi][d] -= step
            if np.min(values[d]) < bounds[lo][d]:
                bounds[lo][d] += step
