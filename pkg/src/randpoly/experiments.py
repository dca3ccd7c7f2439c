"""Monte Carlo experiments on the missing volume of random convex hulls.

Every experiment is replicate-deterministic: replicate i of grid entry j draws
from the stream (master_seed, j * STREAM_STRIDE + i), so reruns and worker
counts cannot change any number. Aggregation folds over replicate index.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from .bodies import AffineMap, Ball, ConvexBody, affine_image, unit_ball_volume
from .hull import DegenerateHullError, convex_hull, missing_volume
from .metrics import (constants, direction_net, hausdorff, nikodym_2d,
                      _as_polygon)
from .sampler import ALGORITHM_ID, make_stream, sample_uniform

STREAM_STRIDE = 2 ** 32  # stream ids: grid_index * STRIDE + replicate


@dataclass(frozen=True)
class ReplicateRecord:
    body_id: str
    d: int
    n: int
    rep: int
    v_rel: float
    master_seed: int
    stream_id: int
    algorithm_id: str = ALGORITHM_ID


@dataclass(frozen=True, eq=False)
class TailCurve:
    """Empirical survival of the shifted and unshifted tail statistics.

    survival is for n*(v_rel - c2 * n^(-2/(d+1))), survival_unshifted for
    n*v_rel. At desk-scale n the shift usually exceeds every observed v_rel,
    leaving the shifted curve degenerate; the unshifted curve then carries the
    information and decay_rate is fitted to it beyond its median.
    """

    body_id: str
    d: int
    n: int
    reps: int
    x: np.ndarray
    survival: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    survival_unshifted: np.ndarray
    ci_lo_unshifted: np.ndarray
    ci_hi_unshifted: np.ndarray
    shift: float
    decay_rate: float | None
    shifted_degenerate: bool


@dataclass(frozen=True, eq=False)
class MomentTable:
    body_id: str
    d: int
    q_list: tuple[float, ...]
    n_grid: tuple[int, ...]
    estimates: np.ndarray  # (len(q_list), len(n_grid))
    ses: np.ndarray
    reps: int
    master_seed: int


@dataclass(frozen=True)
class FitResult:
    model: str
    slope: float
    intercept: float
    r2: float
    residual_max: float
    coefficients: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model": self.model, "slope": self.slope,
                "intercept": self.intercept, "r2": self.r2,
                "residual_max": self.residual_max,
                "coefficients": self.coefficients}


@dataclass(frozen=True, eq=False)
class SteinerFit:
    d: int
    lams: tuple[float, ...]
    coefficients: tuple[float, ...]
    ses: tuple[float, ...]
    n_points: int
    master_seed: int


def _v_rel_batch(body: ConvexBody, n: int, master_seed: int,
                 stream_ids: list[int]) -> list[float]:
    vol = body.volume()
    out = []
    for sid in stream_ids:
        pts = sample_uniform(body, n, make_stream(master_seed, sid))
        out.append(missing_volume(body, pts) / vol)
    return out


def run_missing_volume(body: ConvexBody, n: int, reps: int, master_seed: int, *,
                       body_id: str = "body", stream_base: int = 0,
                       workers: int | None = None) -> list[ReplicateRecord]:
    """reps independent draws of the relative missing volume at sample size n.

    Replicate i uses stream stream_base + i; results are identical for any
    worker count.
    """
    if n < 1 or reps < 1:
        raise ValueError("need n >= 1 and reps >= 1")
    ids = [stream_base + i for i in range(reps)]
    if workers and workers > 1 and reps > 1:
        chunks = [ids[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_v_rel_batch, [body] * len(chunks),
                                [n] * len(chunks), [master_seed] * len(chunks),
                                chunks))
        by_id = {sid: v for chunk, vs in zip(chunks, parts)
                 for sid, v in zip(chunk, vs)}
        values = [by_id[sid] for sid in ids]
    else:
        values = _v_rel_batch(body, n, master_seed, ids)
    return [ReplicateRecord(body_id=body_id, d=body.dim, n=n, rep=i,
                            v_rel=v, master_seed=master_seed, stream_id=sid)
            for i, (sid, v) in enumerate(zip(ids, values))]


def _wilson(p: np.ndarray, n: int, z: float = 1.96):
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


def tail_curve(records: list[ReplicateRecord], grid_points: int = 64,
               x_grid=None) -> TailCurve:
    """Empirical tail curves of one (body, n) replicate set."""
    if not records:
        raise ValueError("no records")
    body_id, d, n = records[0].body_id, records[0].d, records[0].n
    if any(r.body_id != body_id or r.n != n or r.d != d for r in records):
        raise ValueError("records must share body and sample size")
    reps = len(records)
    v = np.array([r.v_rel for r in records])
    shift = constants(d).c2 * n ** (-2.0 / (d + 1))
    y_shift = n * (v - shift)
    y0 = n * v
    if x_grid is None:
        x_grid = np.linspace(0.0, max(float(y0.max()), 1e-12), grid_points)
    x_grid = np.asarray(x_grid, dtype=float)
    s = (y_shift[None, :] > x_grid[:, None]).mean(axis=1)
    s0 = (y0[None, :] > x_grid[:, None]).mean(axis=1)
    lo, hi = _wilson(s, reps)
    lo0, hi0 = _wilson(s0, reps)

    # exponential decay rate of the unshifted tail beyond its median, using
    # only grid points whose survival is estimable (at least 50 hits)
    med = float(np.median(y0))
    mask = (x_grid >= med) & (s0 >= 50.0 / reps) & (s0 > 0.0)
    decay = None
    if mask.sum() >= 3:
        slope = np.polyfit(x_grid[mask], np.log(s0[mask]), 1)[0]
        decay = float(-slope)
    return TailCurve(body_id=body_id, d=d, n=n, reps=reps, x=x_grid,
                     survival=s, ci_lo=lo, ci_hi=hi,
                     survival_unshifted=s0, ci_lo_unshifted=lo0,
                     ci_hi_unshifted=hi0, shift=shift, decay_rate=decay,
                     shifted_degenerate=bool(np.all(y_shift <= 0.0)))


def moment_table(body: ConvexBody, q_list, n_grid, reps: int, master_seed: int, *,
                 body_id: str = "body", workers: int | None = None) -> MomentTable:
    """Plug-in moment estimates over an n grid, sharing replicates across q."""
    q_list = tuple(float(q) for q in q_list)
    n_grid = tuple(int(n) for n in n_grid)
    if any(q <= 0 for q in q_list):
        raise ValueError("moment orders must be positive")
    if list(n_grid) != sorted(set(n_grid)):
        raise ValueError("n_grid must be strictly increasing")
    est = np.empty((len(q_list), len(n_grid)))
    ses = np.empty_like(est)
    for j, n in enumerate(n_grid):
        recs = run_missing_volume(body, n, reps, master_seed, body_id=body_id,
                                  stream_base=j * STREAM_STRIDE, workers=workers)
        v = np.array([r.v_rel for r in recs])
        for iq, q in enumerate(q_list):
            vq = v ** q
            est[iq, j] = vq.mean()
            ses[iq, j] = vq.std(ddof=1) / math.sqrt(reps)
    return MomentTable(body_id=body_id, d=body.dim, q_list=q_list,
                       n_grid=n_grid, estimates=est, ses=ses, reps=reps,
                       master_seed=master_seed)


def rate_fit(table: MomentTable, model: str, q: float | None = None) -> FitResult:
    """Least-squares rate fit of log-moments against the model's regressor.

    "power" regresses on log n (smooth-body scaling n^(-2q/(d+1)));
    "power-log" regresses on log((ln n)^(d-1) / n) (polytope scaling).
    """
    if model not in ("power", "power-log"):
        raise ValueError(f"unknown model {model!r}")
    if q is None:
        if len(table.q_list) != 1:
            raise ValueError("table has several q; pass one explicitly")
        q = table.q_list[0]
    try:
        iq = table.q_list.index(float(q))
    except ValueError:
        raise ValueError(f"q={q} not in table") from None
    if len(table.n_grid) < 4:
        raise ValueError("need at least 4 grid points")
    est = table.estimates[iq]
    if np.any(est <= 0.0):
        raise ValueError("nonpositive moment estimates")
    n = np.asarray(table.n_grid, dtype=float)
    if model == "power":
        x = np.log(n)
    else:
        x = (table.d - 1) * np.log(np.log(n)) - np.log(n)
    y = np.log(est)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(model=model, slope=float(slope), intercept=float(intercept),
                     r2=r2, residual_max=float(np.abs(resid).max()),
                     coefficients={"q": q})


def lower_bound_check(q: float, n_grid, reps: int, master_seed: int, *, d: int = 2,
                      workers: int | None = None) -> FitResult:
    """Plateau of n^(2q/(d+1)) E[v_rel^q] for the ball (the extremal family).

    Returns the plateau floor a_q over the top half of the grid together with
    the fitted power-law slope.
    """
    ball = Ball(np.zeros(d), 1.0)
    table = moment_table(ball, [q], n_grid, reps, master_seed,
                         body_id=f"ball{d}", workers=workers)
    n = np.asarray(table.n_grid, dtype=float)
    scaled = n ** (2.0 * q / (d + 1)) * table.estimates[0]
    a_q = float(scaled[len(scaled) // 2:].min())
    if not a_q > 0.0:
        raise ValueError("plateau is not strictly positive")
    fit = rate_fit(table, "power", q)
    return FitResult(model="plateau", slope=fit.slope, intercept=fit.intercept,
                     r2=fit.r2, residual_max=fit.residual_max,
                     coefficients={"q": q, "a_q": a_q,
                                   "scaled_moments": [float(t) for t in scaled]})


def affine_invariance_test(body: ConvexBody, tmap: AffineMap, n: int, reps: int,
                           seed_a: int, seed_b: int, *,
                           workers: int | None = None) -> float:
    """Two-sample KS p-value between v_rel draws from K and from T(K)."""
    recs_a = run_missing_volume(body, n, reps, seed_a, body_id="K",
                                workers=workers)
    image = affine_image(tmap, body)
    recs_b = run_missing_volume(image, n, reps, seed_b, body_id="TK",
                                workers=workers)
    va = np.array([r.v_rel for r in recs_a])
    vb = np.array([r.v_rel for r in recs_b])
    return float(ks_2samp(va, vb).pvalue)


def random_polygons(count: int, rng: np.random.Generator, *,
                    mean_vertices: float = 20.0,
                    boundary_prob: float = 0.5) -> list[np.ndarray]:
    """Random convex polygons inside the closed unit disc, ccw vertex arrays.

    Each polygon is the hull of a Poisson-sized uniform sample of the disc;
    with probability boundary_prob it is rescaled to touch the unit circle.
    """
    polys = []
    while len(polys) < count:
        m = max(3, int(rng.poisson(mean_vertices)))
        z = rng.standard_normal((m, 2))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        pts = z * np.sqrt(rng.random((m, 1)))
        touch = rng.random() < boundary_prob
        try:
            verts = convex_hull(pts).vertices
        except DegenerateHullError:
            continue
        if touch:
            verts = verts / np.linalg.norm(verts, axis=1).max()
        polys.append(_as_polygon(verts))
    return polys


def lemma2_check(pair_count: int, seed: int, *, m: int = 2048) -> float:
    """Max over random polygon pairs in the unit ball of |symmetric difference|
    over (Hausdorff estimate + error bound).

    The symmetric-difference-to-Hausdorff ratio is bounded by alpha1 of
    constants(2); the returned empirical max should sit far below it.
    """
    from .bodies import VPolytope

    rng = make_stream(seed, 0).generator()
    polys = random_polygons(2 * pair_count, rng)
    worst = 0.0
    for i in range(pair_count):
        p, q = polys[2 * i], polys[2 * i + 1]
        est, err = hausdorff(VPolytope(p), VPolytope(q), m=m)
        nik = nikodym_2d(p, q)
        worst = max(worst, nik / (est + err))
    return worst


def _support_matrix(polys: list[np.ndarray], m: int) -> np.ndarray:
    dirs, _ = direction_net(2, m)
    out = np.empty((len(polys), m), dtype=np.float32)
    for i, p in enumerate(polys):
        out[i] = np.max(p @ dirs.T, axis=0)
    return out


def packing_number(deltas, pool_size: int, seed: int, *,
                   m: int = 512) -> list[tuple[float, int]]:
    """Greedy Hausdorff packing counts over a pool of random convex bodies.

    Bodies are kept when their support-gap distance (a lower bound of the
    Hausdorff distance on an m-direction net) to every kept body exceeds
    delta, so each kept set is a genuine delta-separated packing. Counts are
    reported per delta over the same pool order.
    """
    deltas = [float(x) for x in deltas]
    if any(x <= 0 for x in deltas):
        raise ValueError("deltas must be positive")
    rng = make_stream(seed, 0).generator()
    polys = random_polygons(pool_size, rng)
    S = _support_matrix(polys, m)
    pre = np.ascontiguousarray(S[:, :: max(m // 16, 1)])  # cheap prefilter dirs
    results = []
    for delta in deltas:
        kept_pre = np.empty((256, pre.shape[1]), dtype=np.float32)
        kept_full = np.empty((256, m), dtype=np.float32)
        nk = 0
        for i in range(pool_size):
            blocked = False
            if nk:
                d_pre = np.max(np.abs(kept_pre[:nk] - pre[i]), axis=1)
                close = np.flatnonzero(d_pre <= delta)
                if close.size:
                    d_full = np.max(np.abs(kept_full[close] - S[i]), axis=1)
                    blocked = bool(d_full.min() <= delta)
            if not blocked:
                if nk == len(kept_full):
                    kept_pre = np.vstack([kept_pre, np.empty_like(kept_pre)])
                    kept_full = np.vstack([kept_full, np.empty_like(kept_full)])
                kept_pre[nk] = pre[i]
                kept_full[nk] = S[i]
                nk += 1
        if nk == pool_size:
            import logging

            logging.getLogger(__name__).warning(
                "packing at delta=%g kept the whole pool; counts saturated", delta)
        results.append((delta, nk))
    return results


def packing_fit(counts: list[tuple[float, int]]) -> FitResult:
    """Fit log N = a + b * delta^(-1/2) to greedy packing counts."""
    deltas = np.array([c[0] for c in counts], dtype=float)
    n = np.array([c[1] for c in counts], dtype=float)
    if np.any(n <= 0):
        raise ValueError("packing counts must be positive")
    x = deltas ** -0.5
    y = np.log(n)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(model="packing", slope=float(slope),
                     intercept=float(intercept), r2=r2,
                     residual_max=float(np.abs(resid).max()))


def steiner_coefficient_fit(d: int, master_seed: int, *, lam_grid=None,
                            n_points: int = 10 ** 8) -> SteinerFit:
    """Monte Carlo fit of the ball's dilation coefficients.

    One pooled uniform sample of the annulus envelope {0 < dist(x, B_d) <=
    lam_max} is binned into the shells between consecutive grid values, and
    the coefficients of sum_j L_j lam^j are recovered by weighted least
    squares on the shell increments. Distance to the unit ball depends only
    on |x|, so just radii are simulated; their envelope law has the exact
    inverse CDF r = (1 + u ((1+lam_max)^d - 1))^(1/d).
    """
    if lam_grid is None:
        lam_grid = np.round(np.arange(0.1, 0.5001, 0.05), 10)
    lams = np.asarray(sorted(float(x) for x in lam_grid))
    if lams[0] <= 0:
        raise ValueError("lambda grid must be positive")
    lam_max = float(lams[-1])
    r_out = 1.0 + lam_max
    vol_env = unit_ball_volume(d) * (r_out ** d - 1.0)
    rng = make_stream(master_seed, 0).generator()
    edges = np.concatenate([[0.0], lams])
    counts = np.zeros(len(lams), dtype=np.int64)
    done = 0
    while done < n_points:
        k = int(min(n_points - done, 10 ** 7))
        u = rng.random(k)
        dist = (1.0 + u * (r_out ** d - 1.0)) ** (1.0 / d) - 1.0
        counts += np.histogram(dist, bins=edges)[0]
        done += k
    p = counts / n_points
    shell_est = p * vol_env
    shell_se = vol_env * np.sqrt(np.maximum(p * (1.0 - p), 1e-300) / n_points)
    powers = np.vander(lams, N=d + 1, increasing=True)[:, 1:]  # lam^1..lam^d
    design = np.diff(np.vstack([np.zeros(d), powers]), axis=0)
    w = 1.0 / shell_se
    coef, *_ = np.linalg.lstsq(design * w[:, None], shell_est * w, rcond=None)
    cov = np.linalg.inv((design * w[:, None]).T @ (design * w[:, None]))
    return SteinerFit(d=d, lams=tuple(lams), coefficients=tuple(map(float, coef)),
                      ses=tuple(float(s) for s in np.sqrt(np.diag(cov))),
                      n_points=n_points, master_seed=master_seed)


# ---------------------------------------------------------------------------
# File formats: CSV with one '# '-prefixed JSON metadata line, then a header.
# Floats are written with repr so files round-trip bit-exactly.


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _meta_line(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True, separators=(",", ":"))


def read_metadata(path) -> dict:
    with open(path) as f:
        first = f.readline()
    if not first.startswith("# "):
        raise ValueError(f"{path} has no metadata header")
    return json.loads(first[2:])


def write_replicates_csv(path, records: list[ReplicateRecord],
                         extra_meta: dict | None = None) -> None:
    if not records:
        raise ValueError("no records")
    meta = {"schema": "replicates/v1", "body_id": records[0].body_id,
            "d": records[0].d, "n": records[0].n, "reps": len(records),
            "seed": records[0].master_seed,
            "algorithm_id": records[0].algorithm_id}
    meta.update(extra_meta or {})
    with open(path, "w", newline="") as f:
        f.write(_meta_line(meta) + "\n")
        f.write("body_id,d,n,rep,v_rel\n")
        for r in records:
            f.write(f"{r.body_id},{r.d},{r.n},{r.rep},{_fmt(r.v_rel)}\n")


def write_moments_csv(path, table: MomentTable,
                      extra_meta: dict | None = None) -> None:
    meta = {"schema": "moments/v1", "body_id": table.body_id, "d": table.d,
            "q": list(table.q_list), "grid": list(table.n_grid),
            "reps": table.reps, "seed": table.master_seed,
            "algorithm_id": ALGORITHM_ID}
    meta.update(extra_meta or {})
    with open(path, "w", newline="") as f:
        f.write(_meta_line(meta) + "\n")
        f.write("body_id,d,q,n,estimate,se\n")
        for iq, q in enumerate(table.q_list):
            for jn, n in enumerate(table.n_grid):
                f.write(f"{table.body_id},{table.d},{_fmt(q)},{n},"
                        f"{_fmt(float(table.estimates[iq, jn]))},"
                        f"{_fmt(float(table.ses[iq, jn]))}\n")


def read_moments_csv(path) -> MomentTable:
    meta = read_metadata(path)
    if meta.get("schema") != "moments/v1":
        raise ValueError(f"{path} is not a moment table")
    q_list = tuple(float(q) for q in meta["q"])
    n_grid = tuple(int(n) for n in meta["grid"])
    est = np.empty((len(q_list), len(n_grid)))
    ses = np.empty_like(est)
    with open(path) as f:
        f.readline()
        header = f.readline()
        if not header.startswith("body_id,"):
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in f:
            body_id, d, q, n, e, s = line.rstrip("\n").split(",")
            iq = q_list.index(float(q))
            jn = n_grid.index(int(n))
            est[iq, jn] = float(e)
            ses[iq, jn] = float(s)
    return MomentTable(body_id=meta["body_id"], d=int(meta["d"]), q_list=q_list,
                       n_grid=n_grid, estimates=est, ses=ses,
                       reps=int(meta["reps"]), master_seed=int(meta["seed"]))


def write_tail_csv(path, curve: TailCurve, which: str = "shifted",
                   extra_meta: dict | None = None) -> None:
    if which == "shifted":
        s, lo, hi = curve.survival, curve.ci_lo, curve.ci_hi
    elif which == "unshifted":
        s, lo, hi = (curve.survival_unshifted, curve.ci_lo_unshifted,
                     curve.ci_hi_unshifted)
    else:
        raise ValueError("which must be 'shifted' or 'unshifted'")
    meta = {"schema": f"tail-{which}/v1", "body_id": curve.body_id,
            "d": curve.d, "n": curve.n, "reps": curve.reps,
            "shift": curve.shift, "algorithm_id": ALGORITHM_ID,
            "grid": [float(v) for v in curve.x]}
    meta.update(extra_meta or {})
    with open(path, "w", newline="") as f:
        f.write(_meta_line(meta) + "\n")
        f.write("x,S,ci_lo,ci_hi\n")
        for xi, si, l, h in zip(curve.x, s, lo, hi):
            f.write(f"{_fmt(float(xi))},{_fmt(float(si))},"
                    f"{_fmt(float(l))},{_fmt(float(h))}\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
