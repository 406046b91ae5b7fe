"""Command-line interface: ``mirs simulate | estimate | generate``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict
from datetime import datetime, timezone

from . import __version__
from .combine import BOOTSTRAP, JACKKNIFE, REIMPUTE, REUSE, combine
from .data import read_csv, write_csv
from .errors import ConfigurationError, ImputationError, InputError, MirsError
from .estimate import REFIT, REUSE_WEIGHTS, compute_blend_weights, reuse_estimates_by_k
from .harness import METHOD_CODES, Cell, run_grid
from .impute import ImputationSpec, imputed_totals
from .resample import make_plan, materialize_replicate
from .rng import DEFAULT_SEED, Purpose, StreamKey, derive_stream
from .simgen import DgpConfig, generate_dataset

SIMULATE_COLUMNS = ("method", "G_or_B", "m", "mode", "J", "bias", "rmse", "coverage", "mean_variance", "seed")
ESTIMATE_COLUMNS = ("method", "G_or_B", "m", "mode", "n", "n_missing", "point", "variance", "ci_low", "ci_high", "alpha", "seed")

log = logging.getLogger("mirs")


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of integers") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"{text!r} must list positive integers")
    return values


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"{text} must lie in (0, 1)")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {text} must be a 64-bit unsigned integer")
    return value


def _fmt6(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _table(columns, rows) -> str:
    cells = [list(columns)] + [[_fmt6(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _design(parser, args):
    """(method, list of replicate counts) after checking the flag combination."""
    if args.method == JACKKNIFE:
        if args.boots is not None:
            parser.error("--boots is for --method bootstrap; use --groups with the jackknife")
        sizes = args.groups or [25]
    else:
        if args.groups is not None:
            parser.error("--groups is for --method jackknife; use --boots with the bootstrap")
        sizes = args.boots or [100]
    return args.method, sizes


def cmd_simulate(args, parser) -> int:
    method, sizes = _design(parser, args)
    modes = [REIMPUTE, REUSE] if args.mode == "both" else [args.mode]
    cells = [Cell(method, size, m, mode) for size in sizes for m in args.m for mode in modes]
    dgp = DgpConfig(N=args.pop_size)
    started = datetime.now(timezone.utc).isoformat()
    result = run_grid(cells, args.reps, dgp, args.seed, args.alpha, args.sweeps, args.workers,
                      progress=args.progress, reuse_weights=args.reuse_weights)
    finished = datetime.now(timezone.utc).isoformat()
    rows = [m.as_dict() for m in result.metrics]
    if args.format == "json":
        manifest = {
            "software_version": __version__,
            "seed": args.seed,
            "started": started,
            "finished": finished,
            "config": {
                "method": method, "G_or_B": sizes, "m": args.m, "mode": args.mode, "reps": args.reps,
                "alpha": args.alpha, "sweeps": args.sweeps, "reuse_weights": args.reuse_weights,
                "dgp": asdict(dgp),
            },
            "failures": sum(r["n_failed"] for r in rows),
            "regenerations": sum(r["regenerations"] for r in rows),
            "cells": rows,
        }
        text = json.dumps(manifest, indent=2) + "\n"
    elif args.format == "csv":
        text = _csv(SIMULATE_COLUMNS, rows)
    else:
        text = _table(SIMULATE_COLUMNS, rows)
    _emit(text, args.out)
    return 0


def estimate_dataset(data, method: str, size: int, m: int, mode: str = REIMPUTE, alpha: float = 0.05,
                     seed: int = DEFAULT_SEED, sweeps: int = 1, reuse_weights: str = REFIT):
    """One resampling-with-imputation analysis of a user dataset."""
    root = StreamKey(seed, (0,))
    code = METHOD_CODES[method]
    plan = make_plan(method, data.n, size, derive_stream(root.child(Purpose.PLAN, code, size)))
    spec = ImputationSpec(m=m, sweeps=sweeps)
    if mode == REUSE:
        by_k = reuse_estimates_by_k(data, plan, spec, root.child(Purpose.REUSE), m, reuse_weights=reuse_weights)
        return combine(method, by_k.mean(axis=1), alpha, m, mode)
    thetas = []
    for r in range(plan.size):
        rep = materialize_replicate(data, plan, r)
        w = compute_blend_weights(rep).w
        totals = imputed_totals(rep, w, spec, root.child(Purpose.IMPUTE, code, size, r), m)
        thetas.append(totals.mean() / w.sum())
    return combine(method, thetas, alpha, m, mode)


def cmd_estimate(args, parser) -> int:
    method, sizes = _design(parser, args)
    if len(sizes) != 1 or len(args.m) != 1:
        parser.error("estimate takes a single --groups/--boots value and a single --m value")
    try:
        data = read_csv(args.input)
    except (InputError, OSError) as exc:
        print(f"mirs estimate: {exc}", file=sys.stderr)
        return 2
    try:
        est = estimate_dataset(data, method, sizes[0], args.m[0], args.mode, args.alpha, args.seed, args.sweeps,
                               args.reuse_weights)
    except ConfigurationError as exc:
        print(f"mirs estimate: {exc}", file=sys.stderr)
        return 2
    except ImputationError as exc:
        print(f"mirs estimate: imputation failed: {exc}", file=sys.stderr)
        return 1
    except MirsError as exc:
        print(f"mirs estimate: {exc}", file=sys.stderr)
        return 1
    row = {
        "method": est.method, "G_or_B": est.G_or_B, "m": est.m, "mode": est.mode, "n": data.n,
        "n_missing": data.n_missing, "point": est.point, "variance": est.variance,
        "ci_low": est.ci_low, "ci_high": est.ci_high, "alpha": est.alpha, "seed": args.seed,
    }
    if args.format == "json":
        text = json.dumps(row, indent=2) + "\n"
    elif args.format == "csv":
        text = _csv(ESTIMATE_COLUMNS, [row])
    else:
        text = _table(ESTIMATE_COLUMNS, [row])
    _emit(text, args.out)
    return 0


def cmd_generate(args, parser) -> int:
    dgp = DgpConfig(N=args.pop_size)
    try:
        _, data = generate_dataset(dgp, StreamKey(args.seed, (0, 0)))
        write_csv(data, args.out)
    except OSError as exc:
        print(f"mirs generate: {exc}", file=sys.stderr)
        return 1
    except MirsError as exc:
        print(f"mirs generate: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %d cases (%d missing y) to %s", data.n, data.n_missing, args.out)
    return 0


def _add_design_flags(p, m_default):
    p.add_argument("--method", choices=(JACKKNIFE, BOOTSTRAP), default=JACKKNIFE)
    p.add_argument("--groups", type=_int_list, help="jackknife group count(s) G, comma separated")
    p.add_argument("--boots", type=_int_list, help="bootstrap replicate count(s) B, comma separated")
    p.add_argument("--m", type=_int_list, default=[m_default], help="imputations per replicate, comma separated")
    p.add_argument("--alpha", type=_probability, default=0.05)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--sweeps", type=int, default=1, help="chained-equation sweeps per imputation")
    p.add_argument("--reuse-weights", choices=REUSE_WEIGHTS, default=REFIT,
                   help="reuse mode: refit blend weights per replicate, or keep the full-sample weights")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--out", help="write results here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mirs", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mirs {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo study over a grid of cells")
    _add_design_flags(sim, 1)
    sim.add_argument("--mode", choices=(REIMPUTE, REUSE, "both"), default="both")
    sim.add_argument("--reps", type=int, default=500, help="Monte Carlo repetitions J")
    sim.add_argument("--pop-size", type=int, default=20000)
    sim.add_argument("--workers", type=int, default=None, help="worker processes (default: $MIRS_WORKERS or CPU count)")
    sim.add_argument("--progress", action="store_true", help="report progress on standard error")
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="analyze a CSV dataset (x1,x2,y,source,p_s)")
    _add_design_flags(est, 10)
    est.add_argument("--input", required=True)
    est.add_argument("--mode", choices=(REIMPUTE, REUSE), default=REIMPUTE)
    est.set_defaults(func=cmd_estimate)

    gen = sub.add_parser("generate", help="write one simulated, masked sample as CSV")
    gen.add_argument("--pop-size", type=int, default=20000)
    gen.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, parser)
    except ConfigurationError as exc:
        print(f"mirs {args.command}: {exc}", file=sys.stderr)
        return 2
    except MirsError as exc:
        print(f"mirs {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
