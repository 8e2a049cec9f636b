"""File formats: trajectory/marker CSVs, model and config JSON.

All text formats are UTF-8 with LF line endings and a fixed field order, so
identical inputs serialize to identical bytes. Floats are written with 12
significant digits in CSV (round-trip error below 1e-9 for the value ranges
used here) and with full precision in JSON.
"""

import csv
import io as _io
import json
import math

import numpy as np

from .bagsim import BagSimConfig, EpisodeConfig
from .constrain import KinematicLimits, OptDmpConfig, TcConfig
from .dmp import CanonicalSystem, DmpModel, KernelGrid
from .errors import FormatError
from .markers import LABELS, AlphaRule, MarkerCloud
from .demoprep import HandPosePair
from .trajectory import Trajectory

_FLOAT_FMT = "%.12g"


def _fmt(value):
    if not math.isfinite(value):
        raise FormatError(f"refusing to serialize non-finite value {value!r}")
    return _FLOAT_FMT % value


def _parse_float(token, line, column):
    try:
        value = float(token)
    except ValueError:
        raise FormatError(
            f"line {line}, column {column!r}: {token!r} is not a number"
        ) from None
    if not math.isfinite(value):
        raise FormatError(f"line {line}, column {column!r}: non-finite value {token!r}")
    return value


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_rows(path, expected_header):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file") from None
        if header != expected_header:
            raise FormatError(
                f"line 1: header {header} does not match {expected_header}"
            )
        rows = list(reader)
    if not rows:
        raise FormatError("no data rows")
    for i, row in enumerate(rows, start=2):
        if len(row) != len(expected_header):
            raise FormatError(
                f"line {i}: expected {len(expected_header)} fields, got {len(row)}"
            )
    return rows


# ---------------------------------------------------------------------------
# Trajectory CSV: t,q0,...[,qd0,...,qdd0,...]


def trajectory_header(dof_count, derivatives=True):
    cols = ["t"] + [f"q{d}" for d in range(dof_count)]
    if derivatives:
        cols += [f"qd{d}" for d in range(dof_count)]
        cols += [f"qdd{d}" for d in range(dof_count)]
    return cols


def write_trajectory(path, traj, derivatives=True):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trajectory_header(traj.dof_count, derivatives))
    blocks = [traj.pos, traj.vel, traj.acc] if derivatives else [traj.pos]
    for k in range(traj.n_samples):
        row = [_fmt(traj.t[k])]
        for block in blocks:
            row += [_fmt(v) for v in block[:, k]]
        writer.writerow(row)
    _write_text(path, buf.getvalue())


def read_trajectory(path):
    with open(path, encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh), None)
    if header is None or header[0] != "t":
        raise FormatError("line 1: missing trajectory header starting with 't'")
    n_cols = len(header) - 1
    if n_cols % 3 == 0 and header[1 + n_cols // 3].startswith("qd"):
        dof, derivatives = n_cols // 3, True
    else:
        dof, derivatives = n_cols, False
    expected = trajectory_header(dof, derivatives)
    rows = _read_rows(path, expected)
    data = np.empty((len(rows), len(expected)))
    for i, row in enumerate(rows):
        for j, token in enumerate(row):
            data[i, j] = _parse_float(token, i + 2, expected[j])
    t = data[:, 0]
    pos = data[:, 1 : 1 + dof].T
    if derivatives:
        vel = data[:, 1 + dof : 1 + 2 * dof].T
        acc = data[:, 1 + 2 * dof :].T
        return Trajectory(t, pos, vel, acc)
    return Trajectory.from_positions(t, pos)


# ---------------------------------------------------------------------------
# Marker cloud CSV: x,y,z,label

_MARKER_HEADER = ["x", "y", "z", "label"]


def write_marker_cloud(path, cloud):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_MARKER_HEADER)
    for point, label in zip(cloud.points, cloud.labels):
        writer.writerow([_fmt(v) for v in point] + [label])
    _write_text(path, buf.getvalue())


def read_marker_cloud(path):
    rows = _read_rows(path, _MARKER_HEADER)
    points = np.empty((len(rows), 3))
    labels = []
    for i, row in enumerate(rows):
        for j in range(3):
            points[i, j] = _parse_float(row[j], i + 2, _MARKER_HEADER[j])
        if row[3] not in LABELS:
            raise FormatError(
                f"line {i + 2}, column 'label': {row[3]!r} not in {LABELS}"
            )
        labels.append(row[3])
    return MarkerCloud(points, tuple(labels))


# ---------------------------------------------------------------------------
# Hand pose pair CSV

_POSE_HEADER = (
    ["t"]
    + [f"l{ax}" for ax in "xyz"]
    + [f"r{ax}" for ax in "xyz"]
    + [f"lq{ax}" for ax in "xyzw"]
    + [f"rq{ax}" for ax in "xyzw"]
)


def write_pose_pair(path, pair):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_POSE_HEADER)
    for k in range(pair.n_samples):
        row = (
            [pair.t[k]]
            + list(pair.left_pos[k])
            + list(pair.right_pos[k])
            + list(pair.left_quat[k])
            + list(pair.right_quat[k])
        )
        writer.writerow([repr(float(v)) for v in row])
    _write_text(path, buf.getvalue())


def read_pose_pair(path):
    rows = _read_rows(path, _POSE_HEADER)
    data = np.empty((len(rows), len(_POSE_HEADER)))
    for i, row in enumerate(rows):
        for j, token in enumerate(row):
            data[i, j] = _parse_float(token, i + 2, _POSE_HEADER[j])
    return HandPosePair(
        data[:, 0], data[:, 1:4], data[:, 4:7], data[:, 7:11], data[:, 11:15]
    )


# ---------------------------------------------------------------------------
# DMP model JSON


def write_model(path, model):
    doc = {
        "format": "dmp-model/1",
        "alpha_z": model.alpha_z,
        "beta_z": model.beta_z,
        "alpha_x": model.canonical.alpha_x,
        "tau": model.canonical.tau,
        "start": model.start.tolist(),
        "goal": model.goal.tolist(),
        "centers": model.kernels.centers.tolist(),
        "widths": model.kernels.widths.tolist(),
        "weights": model.weights.tolist(),
        "degenerate_dofs": list(model.degenerate_dofs),
    }
    _write_text(path, json.dumps(doc, indent=2) + "\n")


_MODEL_KEYS = {
    "format",
    "alpha_z",
    "beta_z",
    "alpha_x",
    "tau",
    "start",
    "goal",
    "centers",
    "widths",
    "weights",
    "degenerate_dofs",
}


def read_model(path):
    doc = _load_json(path)
    _check_keys(doc, _MODEL_KEYS, "model")
    if doc.get("format") != "dmp-model/1":
        raise FormatError(f"unsupported model format {doc.get('format')!r}")
    try:
        return DmpModel(
            weights=np.asarray(doc["weights"], dtype=float),
            goal=np.asarray(doc["goal"], dtype=float),
            start=np.asarray(doc["start"], dtype=float),
            alpha_z=doc["alpha_z"],
            beta_z=doc["beta_z"],
            canonical=CanonicalSystem(alpha_x=doc["alpha_x"], tau=doc["tau"]),
            kernels=KernelGrid(
                centers=np.asarray(doc["centers"], dtype=float),
                widths=np.asarray(doc["widths"], dtype=float),
            ),
            degenerate_dofs=tuple(doc.get("degenerate_dofs", ())),
        )
    except KeyError as exc:
        raise FormatError(f"model file missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(f"invalid model file: {exc}") from None


# ---------------------------------------------------------------------------
# Config JSON (strict schema; unknown keys rejected)

_CONFIG_SCHEMA = {
    "seed": None,
    "limits": {"q_lo", "q_hi", "v_lo", "v_hi", "a_lo", "a_hi", "margin"},
    "tc": {"gamma_a", "gamma_r", "horizon"},
    "opt": {"lambda_mode", "grid_count", "qp_tolerance", "boundary_equalities"},
    "alpha": {"k_alpha", "b_alpha", "area_range"},
    "sim": {
        "rim_radius_nominal",
        "depth",
        "stiffness",
        "n_rim_markers",
        "n_body_markers",
        "seed",
        "d_min",
        "d_max",
        "step",
        "uncrumple_gain",
    },
    "episode": {
        "area_target",
        "volume_target",
        "delta_e_target",
        "max_dynamic",
        "max_total",
        "reverse_at_limits",
    },
}


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(
                f"line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from None


def _check_keys(doc, allowed, where):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise FormatError(f"unknown key(s) {unknown} in {where}")


def read_config(path):
    """Parse a run configuration into constructed package objects.

    Returns a dict with any of the keys seed, limits, tc, opt, alpha, sim,
    episode that appear in the file. Unknown keys anywhere are rejected, so
    typos fail loudly instead of silently using a default.
    """
    doc = _load_json(path)
    _check_keys(doc, _CONFIG_SCHEMA, "config")
    out = {}
    for section, allowed in _CONFIG_SCHEMA.items():
        if section not in doc:
            continue
        value = doc[section]
        if allowed is None:
            out[section] = value
            continue
        if not isinstance(value, dict):
            raise FormatError(f"section {section!r} must be an object")
        _check_keys(value, allowed, f"section {section!r}")
        try:
            if section == "limits":
                kwargs = {
                    k: np.asarray(v, dtype=float) if isinstance(v, list) else v
                    for k, v in value.items()
                }
                out[section] = KinematicLimits(**kwargs)
            elif section == "tc":
                out[section] = TcConfig(**value)
            elif section == "opt":
                out[section] = OptDmpConfig(**value)
            elif section == "alpha":
                if "area_range" in value:
                    value = dict(value, area_range=tuple(value["area_range"]))
                out[section] = AlphaRule(**value)
            elif section == "sim":
                out[section] = BagSimConfig(**value)
            elif section == "episode":
                out[section] = EpisodeConfig(**value)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"section {section!r}: {exc}") from None
    return out


def write_config(path, config):
    """Serialize a config dict (same shape as :func:`read_config` output)."""
    doc = {}
    for section in _CONFIG_SCHEMA:
        if section not in config:
            continue
        value = config[section]
        if section == "seed":
            doc[section] = value
        elif section == "limits":
            doc[section] = {
                name: getattr(value, name).tolist()
                for name in ("q_lo", "q_hi", "v_lo", "v_hi", "a_lo", "a_hi")
            }
            doc[section]["margin"] = value.margin
        elif section == "alpha":
            doc[section] = {
                "k_alpha": value.k_alpha,
                "b_alpha": value.b_alpha,
                "area_range": list(value.area_range),
            }
        else:
            doc[section] = {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(value).items()
            }
    _write_text(path, json.dumps(doc, indent=2) + "\n")
