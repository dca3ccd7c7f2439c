"""Independent oracles used to check the library: a gift-wrapping hull with
exact rational predicates, Monte Carlo volume estimators, and brute-force
polygon helpers. Deliberately written without reference to the package's own
hull and metrics code paths."""

from fractions import Fraction

import numpy as np


def orient_sign(a, b, c) -> int:
    """Exact orientation sign of (a, b, c): float filter, Fraction fallback."""
    t1 = (b[0] - a[0]) * (c[1] - a[1])
    t2 = (b[1] - a[1]) * (c[0] - a[0])
    det = t1 - t2
    bound = 4.0 * np.finfo(float).eps * (abs(t1) + abs(t2))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    det = (Fraction(float(b[0])) - Fraction(float(a[0]))) * \
          (Fraction(float(c[1])) - Fraction(float(a[1]))) - \
          (Fraction(float(b[1])) - Fraction(float(a[1]))) * \
          (Fraction(float(c[0])) - Fraction(float(a[0])))
    return (det > 0) - (det < 0)


def gift_wrap_vertices(points) -> np.ndarray:
    """Extreme points of a 2-d point set by Jarvis march, exact predicates.

    Collinear points interior to a hull edge are not reported. Returns the
    vertices sorted lexicographically. Raises ValueError when the points are
    all collinear.
    """
    pts = [tuple(map(float, p)) for p in np.asarray(points, dtype=float)]
    pts = sorted(set(pts))
    if len(pts) < 3:
        raise ValueError("degenerate")
    start = pts[0]  # lexicographic minimum is always extreme
    hull = []
    cur = start
    while True:
        hull.append(cur)
        best = pts[0] if pts[0] != cur else pts[1]
        for cand in pts:
            if cand == cur:
                continue
            s = orient_sign(cur, best, cand)
            further = (cand[0] - cur[0]) ** 2 + (cand[1] - cur[1]) ** 2 > \
                      (best[0] - cur[0]) ** 2 + (best[1] - cur[1]) ** 2
            if s < 0 or (s == 0 and further):
                best = cand
        cur = best
        if cur == start:
            break
        if len(hull) > len(pts):
            raise AssertionError("gift wrapping failed to close")
    if len(hull) < 3:
        raise ValueError("degenerate")
    out = np.array(sorted(hull))
    return out


def shoelace_area(ccw_vertices) -> float:
    v = np.asarray(ccw_vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def in_convex_polygon(ccw_vertices, pts, eps=1e-12) -> np.ndarray:
    """Vectorized membership of pts in a ccw convex polygon (closed)."""
    v = np.asarray(ccw_vertices, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(v)):
        a, b = v[i - 1], v[i]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - \
                (b[1] - a[1]) * (pts[:, 0] - a[0])
        inside &= cross >= -eps
    return inside


def dist_to_convex_polygon(ccw_vertices, pts) -> np.ndarray:
    """Euclidean distance from points to a convex polygon (0 inside)."""
    v = np.asarray(ccw_vertices, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    best = np.full(len(pts), np.inf)
    for i in range(len(v)):
        a, b = v[i - 1], v[i]
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        best = np.minimum(best, np.linalg.norm(pts - proj, axis=1))
    best[in_convex_polygon(v, pts)] = 0.0
    return best


def mc_volume(indicator, lo, hi, n, rng) -> tuple[float, float]:
    """Monte Carlo volume of {x in box : indicator(x)}; returns (est, se)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    box = float(np.prod(hi - lo))
    pts = lo + rng.random((n, lo.size)) * (hi - lo)
    p = float(np.mean(indicator(pts)))
    return box * p, box * float(np.sqrt(max(p * (1 - p), 1e-300) / n))
