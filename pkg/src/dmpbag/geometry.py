"""Planar and spatial geometry helpers for marker-cloud analysis.

2D convex hulls use a hand-rolled monotone chain (simple, exact enough with
the cross-product sign test). Spatial hulls and planar triangulations wrap
scipy.spatial, with the volume recomputed here from signed tetrahedra so the
result does not depend on scipy's internal facet bookkeeping.
"""

import warnings

import numpy as np
import scipy.spatial

from .base import check_array
from .errors import DegenerateHullError, DegenerateVolumeError

_DEDUPE_TOL = 1e-12


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points):
    """Indices of the convex hull of 2D points, counter-clockwise.

    Collinear points on the boundary are dropped. Raises
    :class:`DegenerateHullError` if all points lie on one line (naming the
    offending segment span).
    """
    pts = check_array(points, "points", ndim=2)
    if pts.shape[1] != 2:
        raise ValueError(f"points must be (N, 2), got {pts.shape}")
    if pts.shape[0] < 3:
        raise DegenerateHullError(
            f"need at least 3 points, got {pts.shape[0]}", segment=None
        )
    order = np.lexsort((pts[:, 1], pts[:, 0]))

    def half(indices):
        chain = []
        for i in indices:
            while len(chain) >= 2 and _cross(pts[chain[-2]], pts[chain[-1]], pts[i]) <= 0:
                chain.pop()
            chain.append(i)
        return chain

    lower = half(order)
    upper = half(order[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        seg = (int(order[0]), int(order[-1]))
        raise DegenerateHullError(
            f"all points collinear along segment {seg[0]}-{seg[1]}", segment=seg
        )
    return np.asarray(hull, dtype=int)


def polygon_area(vertices):
    """Shoelace area of a simple polygon given as (K, 2) vertices in order."""
    v = check_array(vertices, "vertices", ndim=2)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def convex_hull_area_2d(points):
    pts = np.asarray(points, dtype=float)
    return polygon_area(pts[convex_hull_2d(pts)])


def convex_hull_volume_3d(points):
    """Volume of the convex hull of 3D points.

    Facets come from quickhull; the volume is the sum of signed tetrahedra
    from the vertex centroid, which is positive for consistently oriented
    outward facets. Raises :class:`DegenerateVolumeError` for coplanar input.
    """
    pts = check_array(points, "points", ndim=2)
    if pts.shape[1] != 3:
        raise ValueError(f"points must be (N, 3), got {pts.shape}")
    if pts.shape[0] < 4:
        raise DegenerateVolumeError(f"need at least 4 points, got {pts.shape[0]}")
    try:
        hull = scipy.spatial.ConvexHull(pts)
    except scipy.spatial.QhullError as exc:
        raise DegenerateVolumeError(f"hull construction failed: {exc}")
    centroid = pts[np.unique(hull.simplices)].mean(axis=0)
    volume = 0.0
    for simplex in hull.simplices:
        a, b, c = pts[simplex] - centroid
        volume += abs(np.dot(a, np.cross(b, c)))
    volume /= 6.0
    if volume <= 0.0 or not np.isfinite(volume):
        raise DegenerateVolumeError("hull has zero volume (coplanar points)")
    return float(volume)


def delaunay_2d(points):
    """Delaunay triangles of 2D points as (M, 3) index rows.

    Near-duplicate points (within 1e-12) are merged before triangulating;
    a warning reports how many were dropped. Returned indices refer to the
    original array.
    """
    pts = check_array(points, "points", ndim=2)
    if pts.shape[1] != 2:
        raise ValueError(f"points must be (N, 2), got {pts.shape}")
    keep = []
    for i, p in enumerate(pts):
        if all(np.max(np.abs(p - pts[j])) > _DEDUPE_TOL for j in keep):
            keep.append(i)
    dropped = pts.shape[0] - len(keep)
    if dropped:
        warnings.warn(f"merged {dropped} duplicate point(s) before triangulation")
    keep = np.asarray(keep, dtype=int)
    if keep.size < 3:
        raise DegenerateHullError("fewer than 3 distinct points", segment=None)
    try:
        tri = scipy.spatial.Delaunay(pts[keep])
    except scipy.spatial.QhullError as exc:
        raise DegenerateHullError(f"triangulation failed: {exc}", segment=None)
    return keep[tri.simplices]


def triangle_circumradius(a, b, c):
    """Circumradius of triangle abc; inf for (near-)degenerate triangles."""
    la = np.linalg.norm(b - c)
    lb = np.linalg.norm(a - c)
    lc = np.linalg.norm(a - b)
    area2 = abs(_cross(a, b, c))
    if area2 < 1e-300:
        return np.inf
    return la * lb * lc / (2.0 * area2)


def alpha_shape_area(points, alpha):
    """Area of the alpha-shape: Delaunay triangles with circumradius <= alpha."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    pts = np.asarray(points, dtype=float)
    total = 0.0
    for tri in delaunay_2d(pts):
        a, b, c = pts[tri]
        if triangle_circumradius(a, b, c) <= alpha:
            total += 0.5 * abs(_cross(a, b, c))
    return float(total)


def pca_2d(points):
    """Principal axes of 2D points.

    Returns (eigenvalues, eigenvectors) with eigenvalues descending and
    eigenvectors as columns; each axis is sign-fixed so its largest-magnitude
    component is positive.
    """
    pts = check_array(points, "points", ndim=2)
    if pts.shape[1] != 2:
        raise ValueError(f"points must be (N, 2), got {pts.shape}")
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 points for principal axes")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / pts.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order]
    for k in range(2):
        j = np.argmax(np.abs(evecs[:, k]))
        if evecs[j, k] < 0:
            evecs[:, k] = -evecs[:, k]
    return evals, evecs
