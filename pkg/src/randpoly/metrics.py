"""Set distances between convex bodies, Steiner dilation machinery, and the
dimension-only constants that drive the deviation-tail experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bodies import BodyError, ConvexBody, VPolytope, unit_ball_volume
from .hull import orient2d


@dataclass(frozen=True)
class ConstantsTable:
    """Explicit constants attached to dimension d.

    alpha1 bounds the symmetric difference by the Hausdorff distance on
    bodies inside the unit ball, alpha2 bounds dilation volumes for
    neighborhood sizes up to 1, and c2 = alpha3 * beta_d is the shift
    constant of the deviation tail.
    """

    d: int
    beta_d: float
    L: tuple[float, ...]
    alpha1: float
    alpha2: float
    alpha3: float
    c2: float

    def to_dict(self) -> dict:
        return {"d": self.d, "beta_d": self.beta_d, "L": list(self.L),
                "alpha1": self.alpha1, "alpha2": self.alpha2,
                "alpha3": self.alpha3, "c2": self.c2}


def steiner_coeffs_ball(d: int) -> np.ndarray:
    """Dilation coefficients L_1..L_d of the unit ball.

    |B^lambda| = beta_d (1+lambda)^d, so L_j = beta_d * C(d, j).
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    beta = unit_ball_volume(d)
    return np.array([beta * math.comb(d, j) for j in range(1, d + 1)])


def constants(d: int) -> ConstantsTable:
    """Closed-form constants for dimension d.

    alpha1 = sum_j L_j(B_d) 2^j = beta_d (3^d - 1)
    alpha2 = sum_j L_j(B_d)      = beta_d (2^d - 1)
    alpha3 = 1 + (3 alpha1 + alpha2) / beta_d = 3^(d+1) + 2^d - 3
    c2 = alpha3 * beta_d
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    beta = unit_ball_volume(d)
    alpha1 = beta * (3 ** d - 1)
    alpha2 = beta * (2 ** d - 1)
    alpha3 = float(3 ** (d + 1) + 2 ** d - 3)
    return ConstantsTable(d=d, beta_d=beta, L=tuple(steiner_coeffs_ball(d)),
                          alpha1=alpha1, alpha2=alpha2, alpha3=alpha3,
                          c2=alpha3 * beta)


@lru_cache(maxsize=32)
def direction_net(d: int, m: int, seed: int = 0) -> tuple[np.ndarray, float]:
    """Deterministic unit directions with a covering-radius figure.

    2-d nets are equispaced angles with an exact chordal covering radius;
    higher dimensions use a Fibonacci sphere (d=3) or seeded directions, with
    the covering radius estimated by probing and padded by a safety factor.
    """
    if d == 2:
        theta = 2.0 * math.pi * np.arange(m) / m
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        return dirs, 2.0 * math.sin(math.pi / (2 * m))
    if d == 3:
        i = np.arange(m) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / m
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        dirs = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    else:
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal((m, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rng = np.random.default_rng(seed + 1)
    probe = rng.standard_normal((8 * m, d))
    probe /= np.linalg.norm(probe, axis=1, keepdims=True)
    # max-min distance of probes to the net, padded: an estimate, not a proof
    best = np.full(len(probe), np.inf)
    for start in range(0, m, 1024):
        block = dirs[start:start + 1024]
        dist = np.linalg.norm(probe[:, None, :] - block[None, :, :], axis=2)
        best = np.minimum(best, dist.min(axis=1))
    return dirs, float(1.5 * best.max())


def hausdorff(g1: ConvexBody, g2: ConvexBody, m: int = 4096,
              seed: int = 0) -> tuple[float, float]:
    """Hausdorff distance via the support-function identity.

    Returns (estimate, error_bound): the estimate is the max support gap over
    an m-direction net, a lower bound of the true distance, which lies within
    estimate + error_bound.
    """
    if g1.dim != g2.dim:
        raise BodyError("dimension mismatch")
    if m < 2 * g1.dim:
        raise ValueError("need at least 2d directions")
    dirs, cov = direction_net(g1.dim, m, seed)
    h1 = g1.support_many(dirs)
    h2 = g2.support_many(dirs)
    est = float(np.max(np.abs(h1 - h2)))
    if cov >= 1.0:
        raise ValueError("direction net too coarse for an error bound")
    # radius bound R <= max_net h / (1 - cov); the gap is (R1+R2)-Lipschitz
    r1 = max(float(h1.max()), 0.0) / (1.0 - cov)
    r2 = max(float(h2.max()), 0.0) / (1.0 - cov)
    return est, (r1 + r2) * cov


def _as_polygon(p) -> np.ndarray:
    """Counter-clockwise vertex array of a convex polygon."""
    if isinstance(p, VPolytope):
        if p.dim != 2:
            raise BodyError("polygon operations are 2-d only")
        v = p.vertices
    else:
        v = np.asarray(p, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise BodyError("polygon must be an (m, 2) array with m >= 3")
    centroid = v.mean(axis=0)
    order = np.argsort(np.arctan2(v[:, 1] - centroid[1], v[:, 0] - centroid[0]))
    v = v[order]
    k = len(v)
    for i in range(k):
        if orient2d(v[i - 2], v[i - 1], v[i]) < 0:
            raise BodyError("nonconvex polygon")
    return v


def polygon_area(p) -> float:
    v = _as_polygon(p)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def polygon_perimeter(p) -> float:
    v = _as_polygon(p)
    return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))


def _clip(subject: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Clip a polygon by the left halfplane of the directed edge a -> b."""
    edge = b - a
    out = []
    k = len(subject)
    prev = subject[-1]
    prev_in = edge[0] * (prev[1] - a[1]) - edge[1] * (prev[0] - a[0]) >= 0.0
    for i in range(k):
        cur = subject[i]
        cur_in = edge[0] * (cur[1] - a[1]) - edge[1] * (cur[0] - a[0]) >= 0.0
        if cur_in != prev_in:
            da = cur - prev
            denom = edge[0] * da[1] - edge[1] * da[0]
            t = (edge[0] * (a[1] - prev[1]) - edge[1] * (a[0] - prev[0])) / denom
            out.append(prev + t * da)
        if cur_in:
            out.append(cur)
        prev, prev_in = cur, cur_in
    return np.array(out) if out else np.empty((0, 2))


def polygon_intersection_area(p, q) -> float:
    """Exact area of the intersection of two convex polygons (clipping)."""
    pv, qv = _as_polygon(p), _as_polygon(q)
    poly = pv
    for i in range(len(qv)):
        if len(poly) < 3:
            return 0.0
        poly = _clip(poly, qv[i - 1], qv[i])
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def nikodym_2d(p, q) -> float:
    """Exact symmetric-difference area of two convex polygons."""
    ap, aq = polygon_area(p), polygon_area(q)
    return max(ap + aq - 2.0 * polygon_intersection_area(p, q), 0.0)


def nikodym_mc(g1: ConvexBody, g2: ConvexBody, stream, n: int) -> tuple[float, float]:
    """Monte Carlo symmetric-difference volume over a shared bounding box.

    Returns (estimate, ci95) with a binomial 95% half-width.
    """
    if g1.dim != g2.dim:
        raise BodyError("dimension mismatch")
    lo1, hi1 = g1.bounding_box()
    lo2, hi2 = g2.bounding_box()
    lo, hi = np.minimum(lo1, lo2), np.maximum(hi1, hi2)
    vol_box = float(np.prod(hi - lo))
    rng = stream.generator()
    pts = lo + rng.random((n, g1.dim)) * (hi - lo)
    in_one = g1.contains_many(pts) ^ g2.contains_many(pts)
    p = float(np.mean(in_one))
    return vol_box * p, 1.96 * vol_box * math.sqrt(p * (1.0 - p) / n)


def neighborhood_volume_2d(p, lam: float) -> float:
    """Exact area of the lam-neighborhood of a convex polygon.

    The dilation adds one rectangle per edge and disc sectors that join to a
    full disc, so |P^lam| = area + perimeter*lam + pi*lam^2.
    """
    if lam < 0:
        raise ValueError("neighborhood size must be nonnegative")
    return polygon_area(p) + polygon_perimeter(p) * lam + math.pi * lam * lam
