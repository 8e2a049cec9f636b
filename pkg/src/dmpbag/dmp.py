"""Point-to-point dynamic movement primitives.

A second-order transformation system per DOF, driven by a shared phase
variable that decays from 1 to 0, with a learned forcing term shaping the
path between start and goal:

    tau * z'  = alpha_z * (beta_z * (g - y) - z) + f(x)
    tau * y'  = z
    tau * x'  = -alpha_x * x

The forcing term is a normalized mixture of Gaussian kernels in phase,
scaled by the phase and the motion amplitude so it vanishes at convergence.
"""

from dataclasses import dataclass, field

import numpy as np

from .base import ParamsMixin, check_array, check_positive
from .errors import DegeneratePhaseError, IntegrationDivergenceError
from .trajectory import Trajectory

# Relative amplitude below which a DOF's weights are unidentifiable and zeroed.
DEGENERATE_AMPLITUDE_RTOL = 1e-6
# Rollout stops once the phase falls below exp(-alpha_x * OVERTIME), i.e.
# after 25% overtime, so the goal-settling tail is captured.
OVERTIME = 1.25
# Floor below which the kernel activation sum counts as numerically dead.
ACTIVATION_FLOOR = 1e-280


@dataclass(frozen=True)
class CanonicalSystem:
    """Shared phase dynamics tau * x' = -alpha_x * x, x(0) = 1."""

    alpha_x: float
    tau: float

    def __post_init__(self):
        check_positive(self.alpha_x, "alpha_x")
        check_positive(self.tau, "tau")

    def phase(self, t, tau=None):
        """Closed-form phase exp(-alpha_x * t / tau) for t >= 0."""
        tau = self.tau if tau is None else tau
        return np.exp(-self.alpha_x * np.asarray(t, dtype=float) / tau)


def phase_at(canonical, t):
    """Phase value at time t (scalar convenience wrapper)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return float(canonical.phase(t))


@dataclass(frozen=True)
class KernelGrid:
    """Gaussian kernels in phase space.

    Centers are strictly decreasing in index: exponential spacing in phase
    corresponds to even spacing in time under the decaying phase.
    """

    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        c = check_array(self.centers, "centers", ndim=1)
        s = check_array(self.widths, "widths", ndim=1)
        if c.size != s.size or c.size < 1:
            raise ValueError("centers and widths must be equal-length, nonempty")
        if np.any(np.diff(c) >= 0):
            raise ValueError("centers must be strictly decreasing")
        if np.any(c <= 0) or np.any(c > 1):
            raise ValueError("centers must lie in (0, 1]")
        if np.any(s <= 0):
            raise ValueError("widths must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", s)

    @property
    def count(self):
        return self.centers.size

    @classmethod
    def spaced(cls, count, alpha_x, overlap=0.5):
        """Exponentially spaced centers c_i = exp(-alpha_x * i / (H - 1))."""
        if count < 2:
            raise ValueError("need at least 2 kernels")
        i = np.arange(count)
        centers = np.exp(-alpha_x * i / (count - 1))
        widths = np.empty(count)
        widths[:-1] = np.abs(np.diff(centers)) * overlap
        widths[-1] = widths[-2]
        return cls(centers=centers, widths=widths)

    def activations(self, x):
        """Unnormalized kernel activations, shape x.shape + (H,)."""
        x = np.asarray(x, dtype=float)
        d = x[..., None] - self.centers
        return np.exp(-0.5 * (d / self.widths) ** 2)

    def normalized(self, x):
        """Activation mixture weights summing to 1 along the last axis."""
        psi = self.activations(x)
        s = psi.sum(axis=-1, keepdims=True)
        if np.any(s < ACTIVATION_FLOOR):
            raise DegeneratePhaseError(
                "kernel activation sum underflowed; phase outside supported range"
            )
        return psi / s


@dataclass(frozen=True)
class DmpModel:
    """Fitted model: per-DOF weights over a shared kernel grid and phase."""

    weights: np.ndarray  # (D, H)
    goal: np.ndarray  # (D,)
    start: np.ndarray  # (D,)
    alpha_z: float
    beta_z: float
    canonical: CanonicalSystem
    kernels: KernelGrid
    degenerate_dofs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        w = check_array(self.weights, "weights", ndim=2)
        g = check_array(self.goal, "goal", ndim=1)
        y0 = check_array(self.start, "start", ndim=1)
        check_positive(self.alpha_z, "alpha_z")
        check_positive(self.beta_z, "beta_z")
        if w.shape != (g.size, self.kernels.count):
            raise ValueError(
                f"weights shape {w.shape} inconsistent with D={g.size}, "
                f"H={self.kernels.count}"
            )
        if g.shape != y0.shape:
            raise ValueError("goal and start must have equal length")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "goal", g)
        object.__setattr__(self, "start", y0)
        object.__setattr__(self, "degenerate_dofs", tuple(self.degenerate_dofs))

    @property
    def dof_count(self):
        return self.goal.size

    @property
    def tau(self):
        return self.canonical.tau

    def amplitude(self):
        return self.goal - self.start

    def with_weights(self, weights):
        return DmpModel(
            weights=weights,
            goal=self.goal,
            start=self.start,
            alpha_z=self.alpha_z,
            beta_z=self.beta_z,
            canonical=self.canonical,
            kernels=self.kernels,
            degenerate_dofs=self.degenerate_dofs,
        )

    def forcing(self, x):
        """Forcing term for all DOFs at phases x, shape x.shape + (D,)."""
        mix = self.kernels.normalized(x)  # (..., H)
        base = mix @ self.weights.T  # (..., D)
        return base * np.asarray(x)[..., None] * self.amplitude()


def forcing_term(model, dof, x):
    """Forcing value for one DOF at phase x."""
    if not 0 <= dof < model.dof_count:
        raise IndexError(f"dof {dof} out of range for D={model.dof_count}")
    return float(model.forcing(np.asarray(x, dtype=float))[..., dof])


def fit(demo, n_kernels=30, alpha_z=50.0, alpha_x=4.0, beta_z=None, overlap=0.5):
    """Fit DMP weights to a demonstration by locally weighted regression.

    The forcing target is obtained by inverting the transformation system
    along the demo, f = tau^2 * acc - alpha_z * (beta_z * (g - y) - tau * vel),
    and each kernel's weight solves its own scalar weighted least squares
    against the phase-scaled amplitude regressor.

    DOFs whose amplitude |g - y0| is negligible get zero weights and are
    flagged in ``degenerate_dofs``.
    """
    if beta_z is None:
        beta_z = alpha_z / 4.0  # critical damping
    tau = demo.duration
    canonical = CanonicalSystem(alpha_x=alpha_x, tau=tau)
    kernels = KernelGrid.spaced(n_kernels, alpha_x, overlap)

    t = demo.t - demo.t[0]
    y0 = demo.pos[:, 0].copy()
    g = demo.pos[:, -1].copy()
    amp = g - y0

    # Rollouts run 25% past the demo duration to settle on the goal; include
    # rest samples (y=g, zero derivatives, hence zero forcing target) over
    # that tail so the late kernels learn to release the system.
    n_pad = max(8, demo.n_samples // 8)
    t_pad = np.linspace(tau, OVERTIME * tau, n_pad + 1)[1:]
    t_all = np.concatenate([t, t_pad])

    x = canonical.phase(t_all)  # (N + n_pad,)
    psi = kernels.activations(x)
    f_target = (
        tau**2 * demo.acc
        - alpha_z * (beta_z * (g[:, None] - demo.pos) - tau * demo.vel)
    )  # (D, N)
    f_target = np.concatenate(
        [f_target, np.zeros((g.size, n_pad))], axis=1
    )  # (D, N + n_pad)

    scale = np.maximum(1.0, np.maximum(np.abs(g), np.abs(y0)))
    degenerate = np.abs(amp) < DEGENERATE_AMPLITUDE_RTOL * scale

    xi = x[None, :] * amp[:, None]  # (D, N)
    num = (psi.T[None, :, :] * (xi * f_target)[:, None, :]).sum(axis=2)  # (D, H)
    den = (psi.T[None, :, :] * (xi**2)[:, None, :]).sum(axis=2)  # (D, H)
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.where(den > 1e-14, num / np.maximum(den, 1e-300), 0.0)
    weights[degenerate] = 0.0

    return DmpModel(
        weights=weights,
        goal=g,
        start=y0,
        alpha_z=alpha_z,
        beta_z=beta_z,
        canonical=canonical,
        kernels=kernels,
        degenerate_dofs=tuple(np.nonzero(degenerate)[0].tolist()),
    )


def _rk4_step_operators(alpha_z, beta_z, tau, dt):
    """Constant per-step operators for RK4 on the linear (y, z) subsystem.

    With state u = (y, z) and scalar input b(t) = (alpha_z*beta_z*g + f)/tau
    entering through e = (0, 1), one RK4 step is exactly

        u_next = R u + s0 * b(t) + s1 * b(t + dt/2) + s2 * b(t + dt)
    """
    m = np.array([[0.0, 1.0 / tau], [-alpha_z * beta_z / tau, -alpha_z / tau]])
    h = dt
    m2 = m @ m
    m3 = m2 @ m
    m4 = m3 @ m
    eye = np.eye(2)
    r = eye + h * m + h**2 / 2 * m2 + h**3 / 6 * m3 + h**4 / 24 * m4
    e = np.array([0.0, 1.0])
    s0 = h / 6 * (eye + h * m + h**2 / 2 * m2 + h**3 / 4 * m3) @ e
    s1 = h / 6 * (4 * eye + 2 * h * m + h**2 / 2 * m2) @ e
    s2 = h / 6 * e
    return r, s0, s1, s2


def rollout(model, dt, tau_override=None):
    """Integrate the model from (y0, z=0, x=1) with fixed-step RK4.

    The phase is evaluated in closed form; the remaining (y, z) subsystem is
    linear in the forcing input, so the RK4 update reduces to a constant
    affine recurrence. Integration runs for 25% past the nominal duration so
    the goal-settling tail is captured.

    Parameters
    ----------
    dt : float
        Step size in seconds; must satisfy dt <= tau / 50.
    tau_override : float, optional
        Replaces the fitted time constant, uniformly rescaling the motion.
    """
    tau = check_positive(tau_override, "tau_override") if tau_override else model.tau
    check_positive(dt, "dt")
    if dt > tau / 50:
        raise ValueError(f"dt={dt} too coarse for tau={tau}; need dt <= tau/50")

    n = int(np.ceil(OVERTIME * tau / dt))
    d = model.dof_count
    alpha_z, beta_z = model.alpha_z, model.beta_z
    g = model.goal
    amp = model.amplitude()

    # Forcing on the half-step grid, from the closed-form phase.
    t_half = np.arange(2 * n + 1) * (dt / 2)
    x_half = model.canonical.phase(t_half, tau=tau)
    mix = model.kernels.normalized(x_half)  # (2n+1, H)
    f = (mix @ model.weights.T) * x_half[:, None] * amp[None, :]  # (2n+1, D)
    b = (alpha_z * beta_z * g[None, :] + f) / tau  # (2n+1, D)

    r, s0, s1, s2 = _rk4_step_operators(alpha_z, beta_z, tau, dt)

    u = np.empty((n + 1, 2, d))
    u[0, 0] = model.start
    u[0, 1] = 0.0
    cur = u[0]
    for k in range(n):
        cur = (
            r @ cur
            + np.outer(s0, b[2 * k])
            + np.outer(s1, b[2 * k + 1])
            + np.outer(s2, b[2 * k + 2])
        )
        u[k + 1] = cur

    if not np.all(np.isfinite(u)):
        bad = int(np.nonzero(~np.isfinite(u).all(axis=(1, 2)))[0][0])
        raise IntegrationDivergenceError(bad)

    y = u[:, 0, :].T  # (D, n+1)
    z = u[:, 1, :].T
    vel = z / tau
    zdot = (alpha_z * (beta_z * (g[:, None] - y) - z) + f[::2].T) / tau
    acc = zdot / tau
    t_out = np.arange(n + 1) * dt
    return Trajectory(t=t_out, pos=y, vel=vel, acc=acc)


def rollout_phase(model, dt, tau_override=None):
    """Phase samples aligned with :func:`rollout` output timestamps."""
    tau = tau_override or model.tau
    n = int(np.ceil(OVERTIME * tau / dt))
    return model.canonical.phase(np.arange(n + 1) * dt, tau=tau)


class Dmp(ParamsMixin):
    """Estimator-style wrapper: fit on a demonstration, roll out motions.

    Parameters
    ----------
    n_kernels : int
        Number of forcing kernels H.
    alpha_z : float
        Transformation-system gain; beta_z defaults to alpha_z / 4 for
        critical damping.
    alpha_x : float
        Phase decay gain.
    overlap : float
        Kernel width as a fraction of the gap to the next center.
    """

    def __init__(self, n_kernels=30, alpha_z=50.0, beta_z=None, alpha_x=4.0,
                 overlap=0.5):
        self.n_kernels = n_kernels
        self.alpha_z = alpha_z
        self.beta_z = beta_z
        self.alpha_x = alpha_x
        self.overlap = overlap

    def fit(self, demo):
        self.model_ = fit(
            demo,
            n_kernels=self.n_kernels,
            alpha_z=self.alpha_z,
            alpha_x=self.alpha_x,
            beta_z=self.beta_z,
            overlap=self.overlap,
        )
        return self

    def rollout(self, dt, tau_override=None):
        if not hasattr(self, "model_"):
            raise RuntimeError("call fit() before rollout()")
        return rollout(self.model_, dt, tau_override=tau_override)
