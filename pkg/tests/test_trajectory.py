import numpy as np
import pytest

from dmpbag.trajectory import Trajectory


def test_from_positions_matches_analytic_derivatives():
    t = np.linspace(0.0, 2.0, 801)
    pos = np.vstack([np.sin(t), t**2])
    traj = Trajectory.from_positions(t, pos)
    inner = slice(2, -2)  # endpoint stencils are only first-order
    assert np.allclose(traj.vel[0, inner], np.cos(t)[inner], atol=1e-4)
    assert np.allclose(traj.vel[1, inner], 2 * t[inner], atol=1e-4)
    assert np.allclose(traj.acc[1, inner], 2.0, atol=1e-3)


def test_basic_properties():
    t = np.array([0.0, 0.5, 1.0])
    pos = np.array([[1.0, 2.0, 3.0]])
    traj = Trajectory.from_positions(t, pos)
    assert traj.dof_count == 1
    assert traj.n_samples == 3
    assert traj.duration == 1.0
    assert traj.dof_ranges()[0] == 2.0


def test_rejects_unsorted_time():
    t = np.array([0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        Trajectory.from_positions(t, np.zeros((1, 3)))


def test_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        Trajectory(
            t=np.array([0.0, 1.0]),
            pos=np.zeros((2, 3)),
            vel=np.zeros((2, 2)),
            acc=np.zeros((2, 2)),
        )


def test_rejects_nonfinite():
    t = np.array([0.0, 1.0, 2.0])
    pos = np.array([[0.0, np.nan, 1.0]])
    with pytest.raises(ValueError):
        Trajectory.from_positions(t, pos)
