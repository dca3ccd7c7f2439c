"""Convex hulls of finite point sets, facet data, and fan-triangulation volumes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull as _Qhull
from scipy.spatial import QhullError


class DegenerateHullError(ValueError):
    """Input points do not affinely span the ambient dimension."""


class SampleOutsideBodyError(ValueError):
    """A point handed to missing_volume lies outside the body."""


# Forward error bound for the 2x2 orientation determinant; floats convert to
# Fraction exactly, so the fallback sign is exact.
_ORIENT2D_EPS = 4.0 * np.finfo(float).eps


def orient2d(a, b, c) -> int:
    """Orientation sign of the triangle (a, b, c): +1 ccw, -1 cw, 0 collinear.

    Evaluates the determinant in floating point with an error filter and
    falls back to exact rational arithmetic when the filter cannot certify
    the sign.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    l = (bx - ax) * (cy - ay)
    r = (by - ay) * (cx - ax)
    det = l - r
    bound = _ORIENT2D_EPS * (abs(l) + abs(r))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    det_exact = (Fraction(bx) - Fraction(ax)) * (Fraction(cy) - Fraction(ay)) \
        - (Fraction(by) - Fraction(ay)) * (Fraction(cx) - Fraction(ax))
    if det_exact > 0:
        return 1
    if det_exact < 0:
        return -1
    return 0


@dataclass(frozen=True, eq=False)
class HullResult:
    """Convex hull of a point set in canonical form.

    vertices are the extreme points sorted lexicographically; each facet is a
    (d-1)-simplex given by a row of vertex indices together with its outward
    normal and offset (x inside satisfies normal . x <= offset).
    """

    vertices: np.ndarray        # (h, d)
    facet_indices: np.ndarray   # (f, d) indices into vertices, rows sorted
    facet_normals: np.ndarray   # (f, d) outward unit normals
    facet_offsets: np.ndarray   # (f,)
    interior_point: np.ndarray  # (d,)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


def _lex_order(points: np.ndarray) -> np.ndarray:
    # lexicographic by first coordinate, then second, ...
    return np.lexsort(points.T[::-1])


def convex_hull(points) -> HullResult:
    """Convex hull of ``points`` ((n, d) array-like, n >= d+1, d >= 2).

    The result is canonical: vertices and facets are sorted lexicographically,
    so the output depends only on the input point set. Points interior to a
    facet hyperplane are not vertices.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=float))
    if pts.ndim != 2:
        raise ValueError("points must be a 2-d array of shape (n, d)")
    n, d = pts.shape
    if d < 2:
        raise ValueError("ambient dimension must be at least 2")
    if n < d + 1:
        raise DegenerateHullError(
            f"degenerate hull: need at least {d + 1} points in dimension {d}, got {n}")
    pts = pts[_lex_order(pts)]
    try:
        qh = _Qhull(pts)
    except QhullError as exc:
        raise DegenerateHullError(f"degenerate hull: {exc.args[0].splitlines()[0]}") from exc

    vert_idx = np.sort(qh.vertices)
    verts = pts[vert_idx]
    order = _lex_order(verts)
    verts = verts[order]
    # map original point index -> canonical vertex index
    remap = np.full(n, -1, dtype=np.intp)
    remap[vert_idx[order]] = np.arange(len(vert_idx))

    faces = np.sort(remap[qh.simplices], axis=1)
    normals = qh.equations[:, :d].copy()
    offsets = -qh.equations[:, d].copy()
    face_order = _lex_order(faces)
    return HullResult(
        vertices=verts,
        facet_indices=faces[face_order],
        facet_normals=normals[face_order],
        facet_offsets=offsets[face_order],
        interior_point=verts.mean(axis=0),
    )


def polytope_volume(h: HullResult) -> float:
    """Volume of the hull as a fan of simplices around the interior point.

    Each facet simplex spans a cone of volume |det| / d! with the interior
    point as apex.
    """
    d = h.dim
    spans = h.vertices[h.facet_indices] - h.interior_point  # (f, d, d)
    dets = np.abs(np.linalg.det(spans))
    return float(dets.sum() / math.factorial(d))


def missing_volume(body, points) -> float:
    """Volume of ``body`` not covered by the convex hull of ``points``.

    Every point must lie in the body (they are meant to be samples from it).
    A degenerate hull misses everything, so the full body volume is returned.
    """
    pts = np.asarray(points, dtype=float)
    if not bool(np.all(body.contains_many(pts))):
        raise SampleOutsideBodyError("sample not in body")
    vol = body.volume()
    try:
        h = convex_hull(pts)
    except DegenerateHullError:
        return vol
    v = vol - polytope_volume(h)
    return float(min(max(v, 0.0), vol))
