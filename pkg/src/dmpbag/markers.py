"""Bag-state metrics from motion-capture marker clouds.

A cloud of labelled 3D markers is reduced to three scalars that describe how
usable a bag opening is: enclosed volume, opening area (concavity-aware via an
alpha-shape), and rim elongation (direction-aware axis ratio). Ratios against
a reference capture drive the refinement controller.
"""

from dataclasses import dataclass, field

import numpy as np

from .base import check_array
from .errors import (
    AlphaRuleMisconfiguredError,
    ElongationUndefinedError,
    InsufficientMarkersError,
    RimNotFoundError,
)
from .geometry import (
    DegenerateHullError,
    alpha_shape_area,
    convex_hull_2d,
    convex_hull_area_2d,
    convex_hull_volume_3d,
    pca_2d,
)

LABELS = ("rim", "rim_inner", "body", "unknown")

_MIN_MARKERS = 8
_MAX_REMOVAL_FRACTION = 0.2
_MAD_MULTIPLIER = 3.0
_DEFAULT_RIM_BAND = 0.15


@dataclass(frozen=True)
class MarkerCloud:
    """Labelled 3D marker positions in the robot frame (meters).

    ``labels`` entries are one of ``rim``, ``rim_inner``, ``body``,
    ``unknown``; a cloud needs at least 8 points to carry meaningful metrics.
    """

    points: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        pts = check_array(self.points, "points", ndim=2)
        if pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        if pts.shape[0] < _MIN_MARKERS:
            raise InsufficientMarkersError(
                f"need at least {_MIN_MARKERS} markers, got {pts.shape[0]}"
            )
        labels = self.labels
        if labels is None:
            labels = ("unknown",) * pts.shape[0]
        labels = tuple(labels)
        if len(labels) != pts.shape[0]:
            raise ValueError(
                f"got {len(labels)} labels for {pts.shape[0]} points"
            )
        bad = sorted(set(labels) - set(LABELS))
        if bad:
            raise ValueError(f"unknown marker label(s) {bad}; expected {LABELS}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class AlphaRule:
    """Linear alpha selection: alpha = k_alpha * hull_area + b_alpha.

    ``k_alpha`` is in 1/m, ``b_alpha`` in m, so alpha carries length units
    (triangles with circumradius <= alpha are kept). The rule must stay
    positive over the configured hull-area operating range.
    """

    k_alpha: float = 0.5
    b_alpha: float = 0.05
    area_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        lo, hi = self.area_range
        if not 0.0 <= lo < hi:
            raise ValueError(f"area_range must satisfy 0 <= lo < hi, got {self.area_range}")
        for area in (lo, hi):
            if self.alpha_for(area) <= 0.0:
                raise AlphaRuleMisconfiguredError(
                    f"alpha {self.alpha_for(area):.4g} m non-positive at "
                    f"hull area {area:.4g} m^2"
                )

    def alpha_for(self, hull_area):
        return self.k_alpha * hull_area + self.b_alpha


@dataclass
class BagMetricsReport:
    """Scalar bag-state metrics plus ratios against a reference capture."""

    volume: float
    area: float
    elongation: float
    volume_ratio: float
    area_ratio: float
    flags: list = field(default_factory=list)

    @property
    def delta_elongation(self):
        return abs(1.0 - self.elongation)


def _geometric_median(points, max_iters=200, tol=1e-10):
    """Weiszfeld iteration; falls back to the coordinate-wise median start."""
    guess = np.median(points, axis=0)
    for _ in range(max_iters):
        dists = np.linalg.norm(points - guess, axis=1)
        mask = dists > 1e-12
        if not np.any(mask):
            return guess
        w = 1.0 / dists[mask]
        new = (points[mask] * w[:, None]).sum(axis=0) / w.sum()
        if np.linalg.norm(new - guess) < tol:
            return new
        guess = new
    return guess


def filter_markers(cloud):
    """Remove positional outliers; returns (filtered cloud, flags).

    A marker is an outlier when its distance to the geometric median exceeds
    median + 3 MAD of the distance distribution. At most 20% of the points
    are removed (worst offenders first; a flag records when the cap binds).
    """
    pts = cloud.points
    dists = np.linalg.norm(pts - _geometric_median(pts), axis=1)
    med = np.median(dists)
    mad = np.median(np.abs(dists - med))
    flags = []
    if mad < 1e-12:
        if np.ptp(dists) < 1e-12:
            flags.append("degenerate-spread")
        return cloud, flags
    outliers = np.flatnonzero(dists > med + _MAD_MULTIPLIER * mad)
    cap = int(_MAX_REMOVAL_FRACTION * len(cloud))
    if outliers.size > cap:
        flags.append("outlier-cap")
        worst = np.argsort(dists[outliers])[::-1][:cap]
        outliers = outliers[worst]
    if outliers.size == 0:
        return cloud, flags
    keep = np.setdiff1d(np.arange(len(cloud)), outliers)
    if keep.size < _MIN_MARKERS:
        raise InsufficientMarkersError(
            f"only {keep.size} markers survive outlier filtering"
        )
    filtered = MarkerCloud(pts[keep], tuple(cloud.labels[i] for i in keep))
    return filtered, flags


def rim_points(cloud, band_fraction=_DEFAULT_RIM_BAND):
    """Rim marker positions as an (M, 3) array.

    With rim labels present, returns the ``rim`` and ``rim_inner`` subset
    (labels override geometry, so folded-over rims are still found). For
    unlabelled clouds, falls back to the top height band spanning
    ``band_fraction`` of the z-extent.
    """
    mask = np.asarray([lbl in ("rim", "rim_inner") for lbl in cloud.labels])
    if not np.any(mask):
        z = cloud.points[:, 2]
        mask = z >= z.max() - band_fraction * (z.max() - z.min())
    picked = cloud.points[mask]
    if picked.shape[0] < 3:
        raise RimNotFoundError(f"only {picked.shape[0]} rim points identified")
    return picked


def elongation(rim_xy):
    """Direction-aware rim axis ratio: y-extent over x-extent.

    PCA runs on the convex-hull vertices (not the raw points) so marker
    density cannot bias the axes. E < 1 means the rim is stretched along x,
    E > 1 along y, E = 1 is a round opening.
    """
    pts = check_array(rim_xy, "rim_xy", ndim=2)
    try:
        hull = convex_hull_2d(pts)
    except DegenerateHullError as exc:
        raise ElongationUndefinedError(f"rim is degenerate: {exc}") from exc
    evals, evecs = pca_2d(pts[hull])
    if evals[0] < 1e-18:
        raise ElongationUndefinedError("rim PCA has zero spread")
    if abs(evecs[0, 0]) > abs(evecs[0, 1]):
        ratio = evals[1] / evals[0]
    else:
        if evals[1] < 1e-18:
            raise ElongationUndefinedError("rim PCA is rank deficient")
        ratio = evals[0] / evals[1]
    return float(np.sqrt(ratio))


def opening_area(rim_xy, rule=None):
    """Concavity-aware opening area of the rim, projected to the xy-plane.

    The alpha threshold grows linearly with the 2D hull area, so larger bags
    get a proportionally coarser shape. The result never exceeds the hull
    area (underestimation is the safe direction for grasp planning).
    """
    rule = AlphaRule() if rule is None else rule
    pts = check_array(rim_xy, "rim_xy", ndim=2)
    hull_area = convex_hull_area_2d(pts)
    alpha = rule.alpha_for(hull_area)
    if alpha <= 0.0:
        raise AlphaRuleMisconfiguredError(
            f"alpha {alpha:.4g} m non-positive at hull area {hull_area:.4g} m^2"
        )
    return min(alpha_shape_area(pts, alpha), hull_area)


def evaluate(cloud, rule=None, volume_ref=None, area_ref=None, band_fraction=_DEFAULT_RIM_BAND):
    """Full metrics pipeline: filter, rim extraction, V/A/E, and ratios.

    ``volume_ref`` and ``area_ref`` come from a reference capture (an open,
    round bag); pass None to skip ratios (they report as nan). Component
    failures are re-raised with the pipeline stage named.
    """
    for name, ref in (("volume_ref", volume_ref), ("area_ref", area_ref)):
        if ref is not None and ref <= 0.0:
            raise ValueError(f"{name} must be positive, got {ref}")
    filtered, flags = _stage("filter", filter_markers, cloud)
    volume = _stage("volume", convex_hull_volume_3d, filtered.points)
    rim = _stage("rim", rim_points, filtered, band_fraction)
    rim_xy = rim[:, :2]
    area = _stage("area", opening_area, rim_xy, rule)
    elong = _stage("elongation", elongation, rim_xy)
    return BagMetricsReport(
        volume=float(volume),
        area=float(area),
        elongation=elong,
        volume_ratio=float(volume / volume_ref) if volume_ref else float("nan"),
        area_ratio=float(area / area_ref) if area_ref else float("nan"),
        flags=flags,
    )


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:
        exc.args = (f"metrics stage '{name}': {exc}",) + exc.args[1:]
        raise
