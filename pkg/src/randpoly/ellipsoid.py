"""Minimum-volume enclosing ellipsoids and normalization onto the unit ball.

The enclosing ellipsoid certifies a dimension-only volume ratio bound of d^d
against the body; the normalization map sends that ellipsoid to the unit ball
so any body lands inside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import (AffineMap, Ball, ConvexBody, DegenerateBodyError,
                     Ellipsoid, HPolytope, VPolytope, affine_image,
                     unit_ball_volume)


class ConvergenceError(RuntimeError):
    """The ellipsoid iteration hit its cap before reaching tolerance."""


@dataclass(frozen=True, eq=False)
class MveeCertificate:
    ellipsoid: Ellipsoid
    ratio: float          # volume(E) / volume(K)
    tolerance: float
    iterations: int


def _khachiyan_weights(points: np.ndarray, tol: float, max_iter: int,
                       trace: list | None = None):
    """Barycentric coordinate ascent for the MVEE dual.

    Classic Khachiyan update augmented with away steps (weight decrease on
    the worst supported point), which is what makes tolerances like 1e-7
    reachable; plain ascent stalls at O(1/k). Ties break at the lowest index.
    """
    m, d = points.shape
    q = np.hstack([points, np.ones((m, 1))])
    u = np.full(m, 1.0 / m)
    dp1 = d + 1.0
    for it in range(1, max_iter + 1):
        lam_mat = q.T @ (q * u[:, None])
        if trace is not None:
            trace.append(float(np.linalg.slogdet(lam_mat)[1]))
        g = np.einsum("ij,ij->i", q @ np.linalg.inv(lam_mat), q)
        j = int(np.argmax(g))
        eps_add = g[j] / dp1 - 1.0
        support = np.flatnonzero(u > 0.0)
        k = support[int(np.argmin(g[support]))]
        eps_away = 1.0 - g[k] / dp1
        if max(eps_add, eps_away) <= tol:
            return u, it
        if eps_add >= eps_away:
            step = (g[j] - dp1) / (dp1 * (g[j] - 1.0))
            u *= 1.0 - step
            u[j] += step
        else:
            denom = dp1 * (g[k] - 1.0)
            if denom <= 0.0:
                step = -u[k] / (1.0 - u[k])  # drop a weight stuck at the center
            else:
                step = max((g[k] - dp1) / denom, -u[k] / (1.0 - u[k]))
            u *= 1.0 - step
            u[k] += step
        np.clip(u, 0.0, None, out=u)
        u /= u.sum()
    raise ConvergenceError(
        f"mvee did not reach tolerance {tol} within {max_iter} iterations")


def _mvee_ellipsoid(points: np.ndarray, tol: float, max_iter: int = 10 ** 6,
                    trace: list | None = None) -> tuple[Ellipsoid, int]:
    """Enclosing ellipsoid of a point cloud, rescaled to contain every point."""
    points = np.asarray(points, dtype=float)
    u, iters = _khachiyan_weights(points, tol, max_iter, trace)
    c = u @ points
    cov = points.T @ (points * u[:, None]) - np.outer(c, c)
    shape = np.linalg.inv(cov) / points.shape[1]
    shape = (shape + shape.T) / 2.0
    # inflate so containment of the defining points is exact, not 1+O(tol)
    y = points - c
    scale = float(np.max(np.einsum("ij,jk,ik->i", y, shape, y)))
    return Ellipsoid(c, shape / scale), iters


def mvee(p: VPolytope, tol: float = 1e-7, max_iter: int = 10 ** 6) -> MveeCertificate:
    """Minimum-volume enclosing ellipsoid of a polytope, with certificate.

    Deterministic given the vertex order; the returned ellipsoid contains all
    vertices and its volume is within a (1+tol)-style factor of optimal.
    """
    if not isinstance(p, VPolytope):
        raise TypeError("mvee expects a VPolytope")
    if not 0.0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    ell, iters = _mvee_ellipsoid(p.vertices, tol, max_iter)
    return MveeCertificate(ellipsoid=ell, ratio=ell.volume() / p.volume(),
                           tolerance=tol, iterations=iters)


def enclosing_ellipsoid(body: ConvexBody, tol: float = 1e-7) -> Ellipsoid:
    """Ellipsoid containing the body with volume at most d^d times the body's.

    Balls and ellipsoids are their own minimum enclosing ellipsoid; polytopes
    go through the vertex-based solver.
    """
    if isinstance(body, Ball):
        return Ellipsoid(body.center, np.eye(body.dim) / body.radius ** 2)
    if isinstance(body, Ellipsoid):
        return body
    if isinstance(body, VPolytope):
        return mvee(body, tol).ellipsoid
    if isinstance(body, HPolytope):
        ell, _ = _mvee_ellipsoid(body.vertex_representation(), tol)
        return ell
    raise TypeError(f"no enclosing ellipsoid for {type(body).__name__}")


def _boundary_points(body: ConvexBody, m: int = 256) -> np.ndarray:
    if isinstance(body, (VPolytope,)):
        return body.vertices
    if isinstance(body, HPolytope):
        return body.vertex_representation()
    d = body.dim
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((m, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if isinstance(body, Ball):
        return body.center + body.radius * dirs
    if isinstance(body, Ellipsoid):
        import scipy.linalg

        return body.center + scipy.linalg.solve_triangular(
            body._chol, dirs.T, lower=True, trans="T").T
    raise TypeError(f"no boundary sampler for {type(body).__name__}")


def ratio_check(body: ConvexBody, cert: MveeCertificate) -> bool:
    """Does the certificate witness containment and the d^d volume ratio?"""
    d = body.dim
    if not cert.ratio <= d ** d * (1.0 + cert.tolerance) ** d:
        return False
    pts = _boundary_points(body)
    ell = cert.ellipsoid
    y = pts - ell.center
    quad = np.einsum("ij,jk,ik->i", y, ell.shape, y)
    return bool(np.all(quad <= (1.0 + cert.tolerance) ** 2))


def normalize(body: ConvexBody, tol: float = 1e-7) -> tuple[AffineMap, ConvexBody]:
    """Affine map sending the enclosing ellipsoid to the unit ball, plus image.

    The image body sits inside the unit ball (up to tol-level float slack) and
    |det T| * volume(E) equals the unit ball volume by construction.
    """
    ell = enclosing_ellipsoid(body, tol)
    chol = np.linalg.cholesky(ell.shape)  # shape = L L^T, T(x) = L^T (x - c)
    tmap = AffineMap(chol.T, -chol.T @ ell.center)
    return tmap, affine_image(tmap, body)
