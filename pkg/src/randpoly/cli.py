"""Command-line front end: reproducible experiment runs emitting CSV/JSON.

Exit codes: 0 success, 2 usage problems, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from . import experiments as ex
from .bodies import Ball, BodyError, Ellipsoid, VPolytope, load_body
from .ellipsoid import ConvergenceError, normalize
from .metrics import constants
from .sampler import EnvelopeTooLooseError

_USAGE_EXIT = 2
_NUMERIC_EXIT = 3


class UsageError(Exception):
    pass


def _builtin_bodies() -> dict:
    square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    cube3 = [[float(b) for b in f"{i:03b}"] for i in range(8)]
    return {
        "disc": lambda: Ball(np.zeros(2), 1.0),
        "ball3": lambda: Ball(np.zeros(3), 1.0),
        "square": lambda: VPolytope(np.array(square)),
        "cube3": lambda: VPolytope(np.array(cube3)),
        "triangle": lambda: VPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])),
        "simplex3": lambda: VPolytope(np.vstack([np.zeros(3), np.eye(3)])),
    }


_ELLIPSE_RE = re.compile(r"^ellipse\(([^,()]+),([^,()]+)\)$")


def resolve_body(spec: str):
    """Builtin name, ellipse(a,b), or path to a body JSON file."""
    builtins = _builtin_bodies()
    if spec in builtins:
        return builtins[spec](), spec
    m = _ELLIPSE_RE.match(spec)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if a <= 0 or b <= 0:
            raise UsageError("ellipse semi-axes must be positive")
        return Ellipsoid(np.zeros(2), np.diag([1.0 / a ** 2, 1.0 / b ** 2])), spec
    if not os.path.exists(spec):
        raise UsageError(
            f"body {spec!r} is neither a builtin ({', '.join(builtins)}, "
            "ellipse(a,b)) nor an existing file")
    try:
        body = load_body(spec)
    except (json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot parse body file {spec}: {exc}") from exc
    name = os.path.splitext(os.path.basename(spec))[0]
    return body, name


def parse_n_grid(text: str) -> list[int]:
    """'64', '100,1000', or 'start:stop:xFACTOR' for a geometric grid."""
    text = text.strip()
    m = re.match(r"^(\d+):(\d+):x(\d+)$", text)
    if m:
        start, stop, fac = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if fac < 2 or start < 1 or stop < start:
            raise UsageError(f"bad n grid {text!r}")
        grid = []
        n = start
        while n <= stop:
            grid.append(n)
            n *= fac
        return grid
    try:
        grid = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad n grid {text!r}") from None
    if not grid or any(v < 1 for v in grid):
        raise UsageError(f"bad n grid {text!r}")
    return grid


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad {flag} list {text!r}") from None
    if not vals:
        raise UsageError(f"empty {flag} list")
    return vals


def _outdir(args) -> str:
    out = args.out or os.environ.get("RANDPOLY_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_constants(args) -> int:
    table = constants(args.dim)
    print(json.dumps(table.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_simulate(args) -> int:
    body, body_id = resolve_body(args.body)
    grid = parse_n_grid(args.n)
    records = []
    for j, n in enumerate(grid):
        records.extend(ex.run_missing_volume(
            body, n, args.reps, args.seed, body_id=body_id,
            stream_base=j * ex.STREAM_STRIDE, workers=args.workers))
    path = os.path.join(_outdir(args), "replicates.csv")
    ex.write_replicates_csv(path, records, extra_meta={
        "command": "simulate", "body": body.to_dict(), "grid": grid})
    print(f"wrote {path}")
    return 0


def cmd_tail(args) -> int:
    body, body_id = resolve_body(args.body)
    grid = parse_n_grid(args.n)
    if len(grid) != 1:
        raise UsageError("tail expects a single n")
    records = ex.run_missing_volume(body, grid[0], args.reps, args.seed,
                                    body_id=body_id, workers=args.workers)
    curve = ex.tail_curve(records)
    out = _outdir(args)
    meta = {"command": "tail", "body": body.to_dict(), "seed": args.seed}
    for which in ("shifted", "unshifted"):
        path = os.path.join(out, f"tail_{which}.csv")
        ex.write_tail_csv(path, curve, which, extra_meta=meta)
        print(f"wrote {path}")
    fit_path = os.path.join(out, "tail_fit.json")
    ex.write_json(fit_path, {
        "body_id": curve.body_id, "d": curve.d, "n": curve.n,
        "reps": curve.reps, "shift": curve.shift,
        "decay_rate": curve.decay_rate,
        "shifted_degenerate": curve.shifted_degenerate, "seed": args.seed})
    print(f"wrote {fit_path}")
    return 0


def cmd_moments(args) -> int:
    body, body_id = resolve_body(args.body)
    grid = parse_n_grid(args.n)
    q_list = _parse_floats(args.q, "--q")
    table = ex.moment_table(body, q_list, grid, args.reps, args.seed,
                            body_id=body_id, workers=args.workers)
    path = os.path.join(_outdir(args), "moments.csv")
    ex.write_moments_csv(path, table, extra_meta={
        "command": "moments", "body": body.to_dict()})
    print(f"wrote {path}")
    return 0


def cmd_fit(args) -> int:
    table = ex.read_moments_csv(args.table)
    fits = {repr(q): ex.rate_fit(table, args.model, q).to_dict()
            for q in table.q_list}
    payload = {"model": args.model, "body_id": table.body_id, "d": table.d,
               "grid": list(table.n_grid), "seed": table.master_seed,
               "fits": fits}
    path = os.path.join(_outdir(args), "fit.json")
    ex.write_json(path, payload)
    for q, fit in fits.items():
        print(f"q={q}: slope={fit['slope']:.4f} r2={fit['r2']:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_packing(args) -> int:
    deltas = _parse_floats(args.deltas, "--deltas")
    counts = ex.packing_number(deltas, args.pool, args.seed)
    out = _outdir(args)
    path = os.path.join(out, "packing.csv")
    meta = ex._meta_line({"schema": "packing/v1", "deltas": deltas,
                          "pool": args.pool, "seed": args.seed,
                          "algorithm_id": ex.ALGORITHM_ID, "grid": deltas})
    with open(path, "w", newline="") as f:
        f.write(meta + "\n")
        f.write("delta,count\n")
        for delta, count in counts:
            f.write(f"{repr(delta)},{count}\n")
    print(f"wrote {path}")
    fit = ex.packing_fit(counts)
    fit_path = os.path.join(out, "packing_fit.json")
    ex.write_json(fit_path, {"seed": args.seed, "pool": args.pool,
                             "counts": [[d, c] for d, c in counts],
                             "fit": fit.to_dict()})
    print(f"wrote {fit_path}")
    return 0


def cmd_normalize(args) -> int:
    body, _ = resolve_body(args.body)
    tmap, image = normalize(body)
    print(json.dumps({"map": tmap.to_dict(), "image": image.to_dict()},
                     indent=2, sort_keys=True))
    return 0


def _add_common(p, *, body=True, n=True, reps=True):
    if body:
        p.add_argument("--body", required=True,
                       help="builtin name, ellipse(a,b), or body JSON path")
    if n:
        p.add_argument("--n", required=True,
                       help="sample size: INT, comma list, or start:stop:xK")
    if reps:
        p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None,
                   help="output directory (default: $RANDPOLY_OUT or .)")
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="randpoly",
        description="Random polytope missing-volume experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="dimension constants as JSON")
    p.add_argument("--dim", type=int, required=True, choices=range(2, 11),
                   metavar="D", help="dimension, 2..10")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("simulate", help="replicate CSV of relative missing volumes")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tail", help="empirical tail curves at one sample size")
    _add_common(p)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("moments", help="moment table over an n grid")
    _add_common(p)
    p.add_argument("--q", required=True, help="comma list of moment orders")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("fit", help="rate fit of a moment table CSV")
    p.add_argument("--table", required=True, help="moments.csv produced by 'moments'")
    p.add_argument("--model", choices=("power", "power-log"), default="power")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("packing", help="greedy Hausdorff packing counts")
    p.add_argument("--deltas", required=True, help="comma list of separations")
    p.add_argument("--pool", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_packing)

    p = sub.add_parser("normalize", help="unit-ball normalization map as JSON")
    p.add_argument("--body", required=True)
    p.set_defaults(func=cmd_normalize)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except (BodyError, ConvergenceError, EnvelopeTooLooseError, ValueError,
            np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
