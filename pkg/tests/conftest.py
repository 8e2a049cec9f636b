import numpy as np
import pytest

from dmpbag.trajectory import Trajectory


def make_demo(seed=0, dofs=3, tau=1.0, n=201, wiggle=0.1):
    """Seeded smooth point-to-point demonstration.

    Minimum-jerk backbone plus a few harmonics under a (4u(1-u))^3 envelope,
    so position, velocity and acceleration all start and end at rest exactly.
    """
    rng = np.random.default_rng(seed)
    y0 = rng.uniform(-1.0, 1.0, dofs)
    g = y0 + rng.uniform(0.3, 1.0, dofs) * rng.choice([-1.0, 1.0], dofs)
    t = np.linspace(0.0, tau, n)
    u = t / tau
    s = 10 * u**3 - 15 * u**4 + 6 * u**5
    env = (4 * u * (1 - u)) ** 3
    pos = y0[:, None] + (g - y0)[:, None] * s[None, :]
    for d in range(dofs):
        pos[d] += wiggle * env * np.sin(
            2 * np.pi * (d + 2) * u + rng.uniform(0.0, 2 * np.pi)
        )
    return Trajectory.from_positions(t, pos)


def resample(traj, times):
    """Linear interpolation of a trajectory's positions at given times."""
    return np.vstack(
        [np.interp(times, traj.t, traj.pos[d]) for d in range(traj.dof_count)]
    )


@pytest.fixture
def demo():
    return make_demo(seed=0)
