"""Convex bodies: balls, ellipsoids, V- and H-polytopes, and affine maps.

All bodies are immutable after construction, reject measure-zero input, and
expose membership, support functions, volumes and axis-aligned bounding boxes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from . import hull as _hull


class BodyError(ValueError):
    """Invalid construction or use of a convex body."""


class DegenerateBodyError(BodyError):
    """The input describes a set of zero Lebesgue measure (or empty)."""


class UnboundedBodyError(BodyError):
    """The input halfspaces describe an unbounded polyhedron."""


class ConversionError(BodyError):
    """Representation conversion not supported at this dimension."""


_MAX_HTOV_DIM = 6  # H->V vertex enumeration is combinatorial; keep it desk-scale


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional unit Euclidean ball."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise BodyError(f"{name} must be a 1-d vector")
    if not np.all(np.isfinite(v)):
        raise BodyError(f"{name} must be finite")
    return v


def _check_dim(body, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != body.dim:
        raise BodyError(
            f"dimension mismatch: body has d={body.dim}, point has d={p.shape[-1]}")
    return p


def _check_unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    norms = np.linalg.norm(u, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise BodyError("direction must be a unit vector (|u| = 1 within 1e-12)")
    return u


class ConvexBody:
    """Common interface of all body variants."""

    dim: int

    def contains(self, p) -> bool:
        raise NotImplementedError

    def contains_many(self, pts) -> np.ndarray:
        pts = _check_dim(self, np.atleast_2d(np.asarray(pts, dtype=float)))
        return np.array([self.contains(p) for p in pts], dtype=bool)

    def support(self, u) -> float:
        raise NotImplementedError

    def support_many(self, dirs) -> np.ndarray:
        dirs = _check_unit(_check_dim(self, np.atleast_2d(dirs)))
        return np.array([self.support(u) for u in dirs], dtype=float)

    def volume(self) -> float:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box (lo, hi) containing the body, from support values."""
        d = self.dim
        eye = np.eye(d)
        hi = self.support_many(eye)
        lo = -self.support_many(-eye)
        return lo, hi

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _as_vector(self.center, "center")
        if c.size < 2:
            raise BodyError("ambient dimension must be at least 2")
        r = float(self.radius)
        if not math.isfinite(r) or r <= 0.0:
            raise DegenerateBodyError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, p) -> bool:
        p = _check_dim(self, np.asarray(p, dtype=float))
        return bool(np.linalg.norm(p - self.center) <= self.radius * (1.0 + 1e-12))

    def contains_many(self, pts) -> np.ndarray:
        pts = _check_dim(self, np.atleast_2d(np.asarray(pts, dtype=float)))
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius * (1.0 + 1e-12)

    def support(self, u) -> float:
        u = _check_unit(_check_dim(self, np.asarray(u, dtype=float)))
        return float(u @ self.center + self.radius)

    def support_many(self, dirs) -> np.ndarray:
        dirs = _check_unit(_check_dim(self, np.atleast_2d(dirs)))
        return dirs @ self.center + self.radius

    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def to_dict(self) -> dict:
        return {"dim": self.dim, "type": "ball",
                "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """Set {x : (x - center)^T shape (x - center) <= 1} with shape positive definite."""

    center: np.ndarray
    shape: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = _as_vector(self.center, "center")
        if c.size < 2:
            raise BodyError("ambient dimension must be at least 2")
        A = np.asarray(self.shape, dtype=float)
        if A.shape != (c.size, c.size):
            raise BodyError("shape matrix must be d x d")
        if not np.allclose(A, A.T, rtol=1e-9, atol=0.0):
            raise BodyError("shape matrix must be symmetric")
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise DegenerateBodyError("shape matrix must be positive definite") from exc
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", A)
        object.__setattr__(self, "_chol", L)

    @property
    def dim(self) -> int:
        return self.center.size

    def _quad(self, pts: np.ndarray) -> np.ndarray:
        # (x-c)^T A (x-c) = |L^T (x-c)|^2
        y = (pts - self.center) @ self._chol
        return np.einsum("...i,...i->...", y, y)

    def contains(self, p) -> bool:
        p = _check_dim(self, np.asarray(p, dtype=float))
        return bool(self._quad(p) <= 1.0 + 1e-12)

    def contains_many(self, pts) -> np.ndarray:
        pts = _check_dim(self, np.atleast_2d(np.asarray(pts, dtype=float)))
        return self._quad(pts) <= 1.0 + 1e-12

    def support(self, u) -> float:
        u = _check_unit(_check_dim(self, np.asarray(u, dtype=float)))
        w = scipy.linalg.solve_triangular(self._chol, u, lower=True)
        return float(u @ self.center + np.linalg.norm(w))

    def support_many(self, dirs) -> np.ndarray:
        dirs = _check_unit(_check_dim(self, np.atleast_2d(dirs)))
        w = scipy.linalg.solve_triangular(self._chol, dirs.T, lower=True)
        return dirs @ self.center + np.linalg.norm(w, axis=0)

    def volume(self) -> float:
        det = np.prod(np.diag(self._chol)) ** 2
        return unit_ball_volume(self.dim) / math.sqrt(det)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        # support(+-e_i) = c_i +- sqrt((A^{-1})_{ii})
        inv = scipy.linalg.cho_solve((self._chol, True), np.eye(self.dim))
        half = np.sqrt(np.diag(inv))
        return self.center - half, self.center + half

    def to_dict(self) -> dict:
        return {"dim": self.dim, "type": "ellipsoid",
                "center": self.center.tolist(), "shape": self.shape.tolist()}


@dataclass(frozen=True, eq=False)
class VPolytope(ConvexBody):
    """Convex hull of a finite vertex list; canonicalized to extreme points."""

    vertices: np.ndarray
    _volume: float = field(init=False, repr=False, compare=False)
    _facet_normals: np.ndarray = field(init=False, repr=False, compare=False)
    _facet_offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] < 2:
            raise BodyError("vertices must form an (m, d) array with d >= 2")
        if not np.all(np.isfinite(pts)):
            raise BodyError("vertices must be finite")
        try:
            h = _hull.convex_hull(pts)
        except _hull.DegenerateHullError as exc:
            raise DegenerateBodyError(f"degenerate polytope: {exc}") from exc
        object.__setattr__(self, "vertices", h.vertices)
        object.__setattr__(self, "_volume", _hull.polytope_volume(h))
        object.__setattr__(self, "_facet_normals", h.facet_normals)
        object.__setattr__(self, "_facet_offsets", h.facet_offsets)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def contains(self, p) -> bool:
        p = _check_dim(self, np.asarray(p, dtype=float))
        tol = 1e-10 * (1.0 + np.abs(self._facet_offsets))
        return bool(np.all(self._facet_normals @ p <= self._facet_offsets + tol))

    def contains_many(self, pts) -> np.ndarray:
        pts = _check_dim(self, np.atleast_2d(np.asarray(pts, dtype=float)))
        tol = 1e-10 * (1.0 + np.abs(self._facet_offsets))
        return np.all(pts @ self._facet_normals.T <= self._facet_offsets + tol, axis=1)

    def support(self, u) -> float:
        u = _check_unit(_check_dim(self, np.asarray(u, dtype=float)))
        return float(np.max(self.vertices @ u))

    def support_many(self, dirs) -> np.ndarray:
        dirs = _check_unit(_check_dim(self, np.atleast_2d(dirs)))
        return np.max(self.vertices @ dirs.T, axis=0)

    def volume(self) -> float:
        return self._volume

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "type": "vpolytope",
                "vertices": self.vertices.tolist()}


def _exact_halfspace_sign(a: np.ndarray, b: float, x: np.ndarray) -> int:
    """Exact sign of b - a.x (positive means strictly inside the halfspace).

    Floating-point evaluation with a forward error filter, exact rational
    fallback on inconclusive cases (floats are exact rationals).
    """
    terms = a * x
    resid = b - terms.sum()
    bound = len(a) * 4.0 * np.finfo(float).eps * (abs(b) + np.abs(terms).sum())
    if resid > bound:
        return 1
    if resid < -bound:
        return -1
    exact = Fraction(float(b)) - sum(
        Fraction(float(ai)) * Fraction(float(xi)) for ai, xi in zip(a, x))
    return (exact > 0) - (exact < 0)


@dataclass(frozen=True, eq=False)
class HPolytope(ConvexBody):
    """Bounded intersection {x : normals @ x <= offsets} with nonempty interior."""

    normals: np.ndarray
    offsets: np.ndarray
    _chebyshev: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.asarray(self.normals, dtype=float)
        b = np.asarray(self.offsets, dtype=float)
        if A.ndim != 2 or A.shape[1] < 2 or b.shape != (A.shape[0],):
            raise BodyError("need (m, d) normals with matching offsets, d >= 2")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise BodyError("halfspaces must be finite")
        row_norms = np.linalg.norm(A, axis=1)
        if np.any(row_norms == 0.0):
            raise BodyError("zero normal vector")
        d = A.shape[1]
        # boundedness: finite support in all +-axis directions suffices
        for i in range(d):
            for sign in (1.0, -1.0):
                c = np.zeros(d)
                c[i] = -sign
                res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d,
                              method="highs")
                if res.status == 3:
                    raise UnboundedBodyError("unbounded")
                if res.status == 2:
                    raise DegenerateBodyError("empty polytope")
        # Chebyshev center: max r s.t. A x + r |a_i| <= b
        c = np.zeros(d + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.hstack([A, row_norms[:, None]]), b_ub=b,
                      bounds=[(None, None)] * d + [(0, None)], method="highs")
        if res.status != 0 or res.x[-1] <= 1e-12 * (1.0 + np.abs(b).max()):
            raise DegenerateBodyError("polytope has empty interior")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "_chebyshev", res.x[:-1].copy())

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def contains(self, p) -> bool:
        p = _check_dim(self, np.asarray(p, dtype=float))
        # float filter first; exact rational sign only on inconclusive rows
        resid = self.offsets - self.normals @ p
        bound = self.dim * 4.0 * np.finfo(float).eps * (
            np.abs(self.offsets) + np.abs(self.normals * p).sum(axis=1))
        if np.all(resid > bound):
            return True
        for i in np.flatnonzero(resid <= bound):
            if _exact_halfspace_sign(self.normals[i], self.offsets[i], p) < 0:
                return False
        return True

    def contains_many(self, pts) -> np.ndarray:
        pts = _check_dim(self, np.atleast_2d(np.asarray(pts, dtype=float)))
        tol = 1e-10 * (1.0 + np.abs(self.offsets))
        return np.all(pts @ self.normals.T <= self.offsets + tol, axis=1)

    def vertex_representation(self) -> np.ndarray:
        """Enumerate the vertices (supported for d <= 6)."""
        d = self.dim
        if d > _MAX_HTOV_DIM:
            raise ConversionError("H-to-V conversion unsupported at this dimension")
        try:
            return self._vertices_cache
        except AttributeError:
            pass
        from itertools import combinations

        A, b = self.normals, self.offsets
        tol = 1e-9 * (1.0 + np.abs(b).max())
        cand = []
        for rows in combinations(range(len(b)), d):
            sub = A[list(rows)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            x = np.linalg.solve(sub, b[list(rows)])
            if np.all(A @ x <= b + tol):
                cand.append(x)
        if len(cand) < d + 1:
            raise DegenerateBodyError("polytope has empty interior")
        verts = _hull.convex_hull(np.array(cand)).vertices
        object.__setattr__(self, "_vertices_cache", verts)
        return verts

    def support(self, u) -> float:
        u = _check_unit(_check_dim(self, np.asarray(u, dtype=float)))
        if self.dim <= _MAX_HTOV_DIM:
            return float(np.max(self.vertex_representation() @ u))
        res = linprog(-u, A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            raise UnboundedBodyError("unbounded")
        return float(-res.fun)

    def support_many(self, dirs) -> np.ndarray:
        dirs = _check_unit(_check_dim(self, np.atleast_2d(dirs)))
        if self.dim <= _MAX_HTOV_DIM:
            return np.max(self.vertex_representation() @ dirs.T, axis=0)
        return np.array([self.support(u) for u in dirs])

    def volume(self) -> float:
        return _hull.polytope_volume(_hull.convex_hull(self.vertex_representation()))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "type": "hpolytope",
                "halfspaces": [{"normal": a.tolist(), "offset": float(o)}
                               for a, o in zip(self.normals, self.offsets)]}


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> linear @ x + offset with invertible linear part."""

    linear: np.ndarray
    offset: np.ndarray
    det: float = field(init=False, compare=False)
    _inv_linear: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        M = np.asarray(self.linear, dtype=float)
        t = _as_vector(self.offset, "offset")
        if M.shape != (t.size, t.size):
            raise BodyError("linear part must be d x d with matching offset")
        det = float(np.linalg.det(M))
        if det == 0.0 or not math.isfinite(det):
            raise BodyError("singular affine map")
        object.__setattr__(self, "linear", M)
        object.__setattr__(self, "offset", t)
        object.__setattr__(self, "det", det)
        object.__setattr__(self, "_inv_linear", np.linalg.inv(M))

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(np.eye(d), np.zeros(d))

    @classmethod
    def from_diagonal(cls, diag, offset=None) -> "AffineMap":
        diag = np.asarray(diag, dtype=float)
        return cls(np.diag(diag), np.zeros(diag.size) if offset is None else offset)

    @property
    def dim(self) -> int:
        return self.offset.size

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.linear.T + self.offset

    def inverse(self) -> "AffineMap":
        return AffineMap(self._inv_linear, -self._inv_linear @ self.offset)

    def to_dict(self) -> dict:
        return {"linear": self.linear.tolist(), "offset": self.offset.tolist(),
                "det": self.det}


def affine_image(tmap: AffineMap, body: ConvexBody) -> ConvexBody:
    """Image of a body under an invertible affine map, in the same family.

    A ball maps to a ball when the linear part is a scaled rotation, and to an
    ellipsoid otherwise.
    """
    if tmap.dim != body.dim:
        raise BodyError("dimension mismatch between map and body")
    M, t = tmap.linear, tmap.offset
    if isinstance(body, Ball):
        S = M @ M.T
        s = float(np.trace(S)) / body.dim
        if np.allclose(S, s * np.eye(body.dim), rtol=0.0, atol=1e-12 * max(s, 1.0)):
            return Ball(tmap(body.center), body.radius * math.sqrt(s))
        body = Ellipsoid(body.center, np.eye(body.dim) / body.radius ** 2)
    if isinstance(body, Ellipsoid):
        Minv = tmap._inv_linear
        A = Minv.T @ body.shape @ Minv
        return Ellipsoid(tmap(body.center), (A + A.T) / 2.0)
    if isinstance(body, VPolytope):
        return VPolytope(tmap(body.vertices))
    if isinstance(body, HPolytope):
        normals = body.normals @ tmap._inv_linear
        return HPolytope(normals, body.offsets + normals @ t)
    raise BodyError(f"unknown body type {type(body).__name__}")


_BODY_TYPES = ("ball", "ellipsoid", "vpolytope", "hpolytope")


def body_from_dict(spec: dict) -> ConvexBody:
    """Build a body from its JSON-style dict (see ``to_dict``)."""
    try:
        kind = spec["type"]
        d = int(spec["dim"])
    except (KeyError, TypeError) as exc:
        raise BodyError(f"invalid body spec: {exc}") from exc
    if kind == "ball":
        body = Ball(np.asarray(spec["center"], dtype=float), float(spec["radius"]))
    elif kind == "ellipsoid":
        body = Ellipsoid(np.asarray(spec["center"], dtype=float),
                         np.asarray(spec["shape"], dtype=float))
    elif kind == "vpolytope":
        body = VPolytope(np.asarray(spec["vertices"], dtype=float))
    elif kind == "hpolytope":
        hs = spec["halfspaces"]
        body = HPolytope(np.asarray([h["normal"] for h in hs], dtype=float),
                         np.asarray([h["offset"] for h in hs], dtype=float))
    else:
        raise BodyError(f"unknown body type {kind!r}; expected one of {_BODY_TYPES}")
    if body.dim != d:
        raise BodyError(f"body spec dim={d} does not match data dimension {body.dim}")
    return body


def load_body(path) -> ConvexBody:
    with open(path) as f:
        return body_from_dict(json.load(f))


def save_body(body: ConvexBody, path) -> None:
    with open(path, "w") as f:
        json.dump(body.to_dict(), f, indent=2)
        f.write("\n")
