"""Demonstration preprocessing: from captured dual-hand poses to joint space.

Raw motion-capture output is a pair of hand pose streams. The pipeline
normalizes the inter-hand distance to a fraction of its observed maximum,
strips all rotation that is not about the motion's main axis, smooths
positions and orientations, and converts one arm to joint space with
damped-least-squares inverse kinematics on a 7-DOF serial chain (the other
arm is a mirror image).

Quaternions are stored scalar-last (x, y, z, w), matching scipy.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter
from scipy.spatial.transform import Rotation

from .base import check_array
from .errors import DegenerateDemoError, UnreachablePoseError
from .trajectory import Trajectory

_QUAT_NORM_TOL = 1e-9
_IK_POS_TOL = 1e-3  # 1 mm
_IK_MAX_ITERS = 200
_IK_DAMPING = 0.05
_IK_NULLSPACE_GAIN = 0.05
DEFAULT_SMOOTH_WINDOW = 21  # ~0.17 s at a 120 Hz capture rate


@dataclass(frozen=True)
class HandPosePair:
    """Synchronized left/right hand poses (positions m, quaternions xyzw)."""

    t: np.ndarray
    left_pos: np.ndarray
    right_pos: np.ndarray
    left_quat: np.ndarray
    right_quat: np.ndarray

    def __post_init__(self):
        t = check_array(self.t, "t", ndim=1)
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        n = t.size
        arrays = {}
        for name in ("left_pos", "right_pos"):
            arrays[name] = check_array(getattr(self, name), name, ndim=2, shape=(n, 3))
        for name in ("left_quat", "right_quat"):
            q = check_array(getattr(self, name), name, ndim=2, shape=(n, 4))
            norms = np.linalg.norm(q, axis=1)
            if np.any(np.abs(norms - 1.0) > _QUAT_NORM_TOL):
                worst = int(np.argmax(np.abs(norms - 1.0)))
                raise ValueError(
                    f"{name}[{worst}] is not unit norm (|q| = {norms[worst]:.12f})"
                )
            arrays[name] = q
        object.__setattr__(self, "t", t)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self):
        return self.t.size


@dataclass(frozen=True)
class DemoBundle:
    """Preprocessed demonstration: smoothed poses, distance profile, axis."""

    pair: HandPosePair
    distance_fraction: np.ndarray
    main_axis: np.ndarray


def distance_profile(pair):
    """Inter-hand distance as a fraction of the maximum observed distance."""
    if pair.n_samples < 2:
        raise ValueError("need at least 2 samples")
    dists = np.linalg.norm(pair.left_pos - pair.right_pos, axis=1)
    peak = dists.max()
    if peak <= 0.0:
        raise DegenerateDemoError("hands coincide throughout the demonstration")
    return dists / peak


def main_rotation_axis(pair, hand="left"):
    """Principal axis of the hand's angular-velocity samples (unit vector).

    The dominant eigenvector of the angular-velocity covariance; sign-fixed
    so the largest-magnitude component is positive.
    """
    quats = getattr(pair, f"{hand}_quat")
    rots = Rotation.from_quat(quats)
    omega = (rots[1:] * rots[:-1].inv()).as_rotvec()
    dt = np.diff(pair.t)[:, None]
    omega = omega / dt
    cov = omega.T @ omega
    if np.linalg.norm(cov) < 1e-18:
        raise DegenerateDemoError("demonstration contains no rotation")
    evals, evecs = np.linalg.eigh(cov)
    axis = evecs[:, -1]
    j = np.argmax(np.abs(axis))
    return axis if axis[j] > 0 else -axis


def _twist_about(quats, axis):
    """Twist component of each quaternion about a unit axis (swing dropped)."""
    out = np.zeros_like(quats)
    flagged = 0
    for i, q in enumerate(quats):
        proj = float(q[:3] @ axis)
        tw = np.array([*(proj * axis), q[3]])
        norm = np.linalg.norm(tw)
        if norm < 1e-12:
            out[i] = (0.0, 0.0, 0.0, 1.0)
            flagged += 1
        else:
            out[i] = tw / norm
    return out, flagged


def filter_rotation(pair, main_axis):
    """Keep only the rotation component about the main axis, per hand.

    Uses the twist-swing decomposition and discards the swing. Samples with
    no twist component (a pure half-turn orthogonal to the axis) become the
    identity rotation, with a warning.
    """
    axis = check_array(main_axis, "main_axis", ndim=1, shape=(3,))
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ValueError("main_axis must be a unit vector")
    left, n_left = _twist_about(pair.left_quat, axis)
    right, n_right = _twist_about(pair.right_quat, axis)
    if n_left or n_right:
        warnings.warn(
            f"{n_left + n_right} sample(s) had no twist about the main axis; "
            "substituted identity"
        )
    return HandPosePair(pair.t, pair.left_pos, pair.right_pos, left, right)


def _smooth_quats(quats, window):
    half = window // 2
    n = quats.shape[0]
    out = np.empty_like(quats)
    for i in range(n):
        h = min(half, i, n - 1 - i)  # shrink the window at the endpoints
        block = quats[i - h : i + h + 1].copy()
        signs = np.where(block @ quats[i] < 0.0, -1.0, 1.0)
        mean = (block * signs[:, None]).mean(axis=0)
        out[i] = mean / np.linalg.norm(mean)
    return out


def smooth(pair, window=DEFAULT_SMOOTH_WINDOW):
    """Savitzky-Golay (order 3) on positions, normalized averaging on quats.

    ``window`` must be odd; 1 is the identity. Quaternion blocks are
    sign-aligned to the center sample before averaging so antipodal
    representations cannot cancel.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and positive, got {window}")
    if window > pair.n_samples:
        raise ValueError(
            f"window {window} exceeds sample count {pair.n_samples}"
        )
    if window == 1:
        return pair
    if window < 5:
        raise ValueError("windows above 1 must be >= 5 for the order-3 filter")
    left = savgol_filter(pair.left_pos, window, 3, axis=0, mode="interp")
    right = savgol_filter(pair.right_pos, window, 3, axis=0, mode="interp")
    return HandPosePair(
        pair.t,
        left,
        right,
        _smooth_quats(pair.left_quat, window),
        _smooth_quats(pair.right_quat, window),
    )


def mirror_hand(positions, quats):
    """Mirror poses across the x-z plane (left arm -> right arm)."""
    pos = np.asarray(positions, dtype=float) * np.array([1.0, -1.0, 1.0])
    q = np.asarray(quats, dtype=float) * np.array([-1.0, 1.0, -1.0, 1.0])
    return pos, q


def preprocess(pair, window=DEFAULT_SMOOTH_WINDOW):
    """Full preprocessing chain: smooth, find the axis, filter rotations."""
    smoothed = smooth(pair, window)
    axis = main_rotation_axis(smoothed)
    filtered = filter_rotation(smoothed, axis)
    return DemoBundle(
        pair=filtered,
        distance_fraction=distance_profile(filtered),
        main_axis=axis,
    )


class KinematicChain:
    """Serial chain in modified Denavit-Hartenberg parameters.

    Each row of ``dh`` is (a, alpha, d, theta_offset); a trailing fixed
    flange transform may be given as one more row used with joint angle 0.
    """

    def __init__(self, dh, n_joints=None):
        self.dh = check_array(dh, "dh", ndim=2)
        if self.dh.shape[1] != 4:
            raise ValueError(f"dh rows must be (a, alpha, d, theta), got {self.dh.shape}")
        self.n_joints = self.dh.shape[0] if n_joints is None else int(n_joints)
        if not 0 < self.n_joints <= self.dh.shape[0]:
            raise ValueError("n_joints must be in 1..len(dh)")

    @classmethod
    def from_config(cls, config):
        rows = [
            [row["a"], row["alpha"], row["d"], row.get("theta_offset", 0.0)]
            for row in config["joints"]
        ]
        n_joints = len(rows)
        for row in config.get("fixed", []):
            rows.append([row["a"], row["alpha"], row["d"], row.get("theta_offset", 0.0)])
        return cls(np.asarray(rows, dtype=float), n_joints=n_joints)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_config(json.load(fh))

    @classmethod
    def default_7dof(cls):
        """A 7-DOF torque-controlled arm with published geometry."""
        dh = np.array(
            [
                # a, alpha, d, theta_offset
                [0.0, 0.0, 0.333, 0.0],
                [0.0, -np.pi / 2, 0.0, 0.0],
                [0.0, np.pi / 2, 0.316, 0.0],
                [0.0825, np.pi / 2, 0.0, 0.0],
                [-0.0825, -np.pi / 2, 0.384, 0.0],
                [0.0, np.pi / 2, 0.0, 0.0],
                [0.088, np.pi / 2, 0.0, 0.0],
                [0.0, 0.0, 0.107, 0.0],  # fixed flange
            ]
        )
        return cls(dh, n_joints=7)

    def fk(self, q):
        """Pose of the chain tip: (position, quaternion xyzw)."""
        q = check_array(q, "q", ndim=1, shape=(self.n_joints,))
        tf = np.eye(4)
        for i, (a, alpha, d, theta0) in enumerate(self.dh):
            theta = theta0 + (q[i] if i < self.n_joints else 0.0)
            ct, st = np.cos(theta), np.sin(theta)
            ca, sa = np.cos(alpha), np.sin(alpha)
            link = np.array(
                [
                    [ct, -st, 0.0, a],
                    [st * ca, ct * ca, -sa, -d * sa],
                    [st * sa, ct * sa, ca, d * ca],
                    [0.0, 0.0, 0.0, 1.0],
                ]
            )
            tf = tf @ link
        return tf[:3, 3].copy(), Rotation.from_matrix(tf[:3, :3]).as_quat()

    def jacobian(self, q, eps=1e-6):
        """Geometric Jacobian (6 x n) by central differences of the pose."""
        jac = np.zeros((6, self.n_joints))
        for j in range(self.n_joints):
            qp, qm = q.copy(), q.copy()
            qp[j] += eps
            qm[j] -= eps
            pp, quat_p = self.fk(qp)
            pm, quat_m = self.fk(qm)
            jac[:3, j] = (pp - pm) / (2.0 * eps)
            drot = Rotation.from_quat(quat_p) * Rotation.from_quat(quat_m).inv()
            jac[3:, j] = drot.as_rotvec() / (2.0 * eps)
        return jac


def _pose_error(chain, q, target_pos, target_quat):
    pos, quat = chain.fk(q)
    e = np.empty(6)
    e[:3] = target_pos - pos
    e[3:] = (Rotation.from_quat(target_quat) * Rotation.from_quat(quat).inv()).as_rotvec()
    return e


def _ik_solve(chain, q0, target_pos, target_quat, q_lo, q_hi):
    q = q0.copy()
    q_mid = 0.5 * (q_lo + q_hi)
    for _ in range(_IK_MAX_ITERS):
        e = _pose_error(chain, q, target_pos, target_quat)
        e_pos = np.linalg.norm(e[:3])
        if e_pos < 1e-6 and np.linalg.norm(e[3:]) < 1e-5:
            break
        jac = chain.jacobian(q)
        jjt = jac @ jac.T + _IK_DAMPING**2 * np.eye(6)
        dq = jac.T @ np.linalg.solve(jjt, e)
        # bias the redundant direction toward mid-range without moving the
        # tip; fade the bias out near convergence so the solution is the
        # pose-consistent point nearest the warm start
        fade = min(1.0, e_pos / 0.05)
        pinv = jac.T @ np.linalg.solve(jjt, jac)
        dq += fade * (np.eye(chain.n_joints) - pinv) @ (
            _IK_NULLSPACE_GAIN * (q_mid - q)
        )
        q = np.clip(q + dq, q_lo, q_hi)
    return q, float(np.linalg.norm(_pose_error(chain, q, target_pos, target_quat)[:3]))


def to_joint_space(pair, chain, limits, q0=None, hand="left"):
    """Damped-least-squares IK over the pose path, warm-started per sample.

    Joint limits are enforced by clamping plus a nullspace bias toward
    mid-range. Velocities and accelerations come from central differences
    (one-sided at the endpoints). Raises :class:`UnreachablePoseError` when
    the position residual stays above 1 mm for a sample.
    """
    positions = getattr(pair, f"{hand}_pos")
    quats = getattr(pair, f"{hand}_quat")
    q_lo, q_hi = limits.q_lo, limits.q_hi
    if q_lo.size != chain.n_joints:
        raise ValueError(
            f"limits cover {q_lo.size} joints, chain has {chain.n_joints}"
        )
    q = 0.5 * (q_lo + q_hi) if q0 is None else check_array(
        q0, "q0", ndim=1, shape=(chain.n_joints,)
    )
    rows = np.empty((pair.n_samples, chain.n_joints))
    for k in range(pair.n_samples):
        q, residual = _ik_solve(chain, q, positions[k], quats[k], q_lo, q_hi)
        if residual > _IK_POS_TOL:
            raise UnreachablePoseError(k, residual)
        rows[k] = q
    return Trajectory.from_positions(pair.t, rows.T)
