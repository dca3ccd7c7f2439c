"""Seed-deterministic uniform sampling from convex bodies.

Streams are counter-based (Philox), keyed by (master_seed, stream_id), so
replicate i can be regenerated in isolation and results never depend on
worker scheduling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.linalg

from .bodies import Ball, ConvexBody, Ellipsoid, HPolytope, VPolytope

log = logging.getLogger(__name__)

ALGORITHM_ID = "philox4x64"

_MAX_UINT64 = 2 ** 64


class EnvelopeTooLooseError(RuntimeError):
    """Rejection sampling from the envelope essentially never hits the body."""


@dataclass(frozen=True)
class RngStream:
    """Value-type handle for one reproducible random stream."""

    master_seed: int
    stream_id: int
    algorithm_id: str = ALGORITHM_ID

    def __post_init__(self):
        if not 0 <= self.master_seed < _MAX_UINT64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= self.stream_id < _MAX_UINT64:
            raise ValueError("stream_id must fit in 64 bits")
        if self.algorithm_id != ALGORITHM_ID:
            raise ValueError(f"unknown stream algorithm {self.algorithm_id!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def make_stream(master_seed: int, stream_id: int) -> RngStream:
    return RngStream(int(master_seed), int(stream_id))


def _ball_points(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    # uniform in the unit ball: random direction times U^(1/d) radius
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * rng.random((n, 1)) ** (1.0 / d)


def _simplex_points(rng: np.random.Generator, n: int, verts: np.ndarray) -> np.ndarray:
    # exponential spacings give uniform barycentric weights
    e = rng.standard_exponential((n, verts.shape[0]))
    return (e / e.sum(axis=1, keepdims=True)) @ verts


def _is_box(body: VPolytope) -> bool:
    d = body.dim
    if body.vertices.shape[0] != 2 ** d:
        return False
    lo, hi = body.vertices.min(axis=0), body.vertices.max(axis=0)
    corners = np.array(list(product(*zip(lo, hi))))
    corners = corners[np.lexsort(corners.T[::-1])]
    return np.array_equal(corners, body.vertices)


def _rejection_envelope(body: ConvexBody):
    """Smaller of the MVEE and the bounding box, as a sampleable body."""
    lo, hi = body.bounding_box()
    box_vol = float(np.prod(hi - lo))
    env = getattr(body, "_mvee_envelope", None)
    if env is None:
        from .ellipsoid import enclosing_ellipsoid

        try:
            env = enclosing_ellipsoid(body)
        except Exception:
            env = False  # fall back to the box permanently
        object.__setattr__(body, "_mvee_envelope", env)
    if env and env.volume() < box_vol:
        return env
    return (lo, hi)


def _envelope_batch(env, rng: np.random.Generator, m: int) -> np.ndarray:
    if isinstance(env, Ellipsoid):
        z = _ball_points(rng, m, env.dim)
        return env.center + scipy.linalg.solve_triangular(
            env._chol, z.T, lower=True, trans="T").T
    lo, hi = env
    return lo + rng.random((m, lo.size)) * (hi - lo)


def sample_uniform(body: ConvexBody, n: int, stream: RngStream) -> np.ndarray:
    """n i.i.d. points uniformly distributed in the body, as an (n, d) array.

    Balls, ellipsoids, simplices and boxes use closed-form samplers; other
    polytopes fall back to rejection from the MVEE or bounding box, whichever
    is smaller.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    rng = stream.generator()
    if isinstance(body, Ball):
        return body.center + body.radius * _ball_points(rng, n, body.dim)
    if isinstance(body, Ellipsoid):
        z = _ball_points(rng, n, body.dim)
        return body.center + scipy.linalg.solve_triangular(
            body._chol, z.T, lower=True, trans="T").T
    if isinstance(body, VPolytope):
        if body.vertices.shape[0] == body.dim + 1:
            return _simplex_points(rng, n, body.vertices)
        if _is_box(body):
            lo, hi = body.bounding_box()
            return lo + rng.random((n, body.dim)) * (hi - lo)
    if not isinstance(body, (VPolytope, HPolytope)):
        raise TypeError(f"cannot sample from {type(body).__name__}")

    env = _rejection_envelope(body)
    out = np.empty((n, body.dim))
    got = 0
    drawn = 0
    batch = min(max(4 * n, 1024), 1 << 16)
    while got < n:
        cand = _envelope_batch(env, rng, batch)
        keep = cand[body.contains_many(cand)]
        drawn += batch
        if got == 0 and len(keep) == 0 and drawn >= 10 ** 6:
            raise EnvelopeTooLooseError(
                "envelope too loose: acceptance rate below 1e-6")
        take = min(n - got, len(keep))
        out[got:got + take] = keep[:take]
        got += take
    log.debug("rejection sampling: %d/%d accepted (rate %.3g)", n, drawn, n / drawn)
    return out


def rejection_acceptance(body: ConvexBody, stream: RngStream, n_draws: int) -> float:
    """Empirical acceptance rate of the rejection envelope (diagnostic)."""
    env = _rejection_envelope(body)
    rng = stream.generator()
    cand = _envelope_batch(env, rng, n_draws)
    return float(np.mean(body.contains_many(cand)))


def envelope_volume(body: ConvexBody) -> float:
    """Volume of the rejection envelope that sample_uniform would use."""
    env = _rejection_envelope(body)
    if isinstance(env, Ellipsoid):
        return env.volume()
    lo, hi = env
    return float(np.prod(hi - lo))
