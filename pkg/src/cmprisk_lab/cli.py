"""``bench`` command line: run a simulation grid, aggregate results, or fit
one method on an external dataset."""

from __future__ import annotations

import argparse
import os
import sys

from . import bench


def _add_run(sub):
    p = sub.add_parser("run", help="run a config-driven simulation grid")
    p.add_argument("--config", required=True, help="bench config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--timing", action="store_true",
                   help="record real wall_seconds (breaks byte-identical reruns)")


def _add_aggregate(sub):
    p = sub.add_parser("aggregate", help="summarize a results CSV")
    p.add_argument("--in", dest="in_path", required=True, help="results CSV")
    p.add_argument("--by", default="n,p,method",
                   help="comma-separated group keys (default n,p,method)")
    p.add_argument("--out", required=True, help="summary CSV path")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering next to the summary")


def _add_fit(sub):
    p = sub.add_parser("fit", help="fit one method on a dataset CSV")
    p.add_argument("--data", required=True, help="input dataset CSV")
    p.add_argument("--method", required=True, choices=bench.METHODS)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-col", default="time")
    p.add_argument("--status-col", default="status")
    p.add_argument("--no-figures", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bench", description="competing-risk simulation benchmark")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_aggregate(sub)
    _add_fit(sub)
    return parser


def cmd_run(args):
    config = bench.parse_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    rows = bench.run_grid(config, jobs=args.jobs, timing=args.timing)
    out_path = os.path.join(args.out, "results.csv")
    bench.write_results(rows, out_path)
    failed = sum(1 for r in rows if r["status"] != "ok")
    print("wrote %s (%d rows, %d failed)" % (out_path, len(rows), failed))
    return 0


def cmd_aggregate(args):
    by = [k.strip() for k in args.by.split(",") if k.strip()]
    if not by:
        raise bench.ConfigError("--by must name at least one column")
    summary = bench.aggregate(args.in_path, by, args.out)
    print("wrote %s (%d groups)" % (args.out, len(summary)))
    if not args.no_figures:
        from .report import save_summary_figures

        out_dir = os.path.dirname(os.path.abspath(args.out))
        for path in save_summary_figures(summary, out_dir):
            print("wrote %s" % path)
    return 0


def cmd_fit(args):
    schema = {"time": args.time_col, "status": args.status_col}
    bench.run_external(args.data, args.method, args.out,
                       horizon=args.horizon, seed=args.seed, schema=schema,
                       figures=not args.no_figures)
    print("wrote %s" % os.path.join(args.out, "predictions.csv"))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "aggregate": cmd_aggregate, "fit": cmd_fit}
    try:
        return handler[args.command](args)
    except bench.ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
