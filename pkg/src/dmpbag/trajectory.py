"""Time-stamped multi-DOF trajectory container."""

from dataclasses import dataclass

import numpy as np

from .base import check_array


@dataclass(frozen=True)
class Trajectory:
    """Sampled positions, velocities and accelerations of a D-DOF motion.

    Attributes
    ----------
    t : ndarray, shape (N,)
        Strictly increasing timestamps in seconds.
    pos, vel, acc : ndarray, shape (D, N)
        Joint positions (rad), velocities (rad/s) and accelerations (rad/s^2).
    """

    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray

    def __post_init__(self):
        t = check_array(self.t, "t", ndim=1)
        pos = check_array(self.pos, "pos", ndim=2)
        vel = check_array(self.vel, "vel", ndim=2)
        acc = check_array(self.acc, "acc", ndim=2)
        if t.size < 2:
            raise ValueError("trajectory needs at least 2 samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not (pos.shape == vel.shape == acc.shape) or pos.shape[1] != t.size:
            raise ValueError(
                f"pos/vel/acc must share shape (D, {t.size}), got "
                f"{pos.shape}, {vel.shape}, {acc.shape}"
            )
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "vel", vel)
        object.__setattr__(self, "acc", acc)

    @property
    def dof_count(self):
        return self.pos.shape[0]

    @property
    def n_samples(self):
        return self.t.size

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def dof_ranges(self):
        """Per-DOF position range max - min, shape (D,)."""
        return self.pos.max(axis=1) - self.pos.min(axis=1)

    @classmethod
    def from_positions(cls, t, pos):
        """Build a trajectory from positions only, differentiating numerically.

        Central differences at interior samples, one-sided at the endpoints.
        """
        t = check_array(t, "t", ndim=1)
        pos = check_array(pos, "pos", ndim=2)
        vel = np.gradient(pos, t, axis=1)
        acc = np.gradient(vel, t, axis=1)
        return cls(t=t, pos=pos, vel=vel, acc=acc)
