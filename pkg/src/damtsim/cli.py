"""Command line interface.

Verbs:
  run        execute a JSON scenario config (grid) and write a result CSV
  sweep      execute a pre-defined figure sweep (fig5..fig11) at desk or
             paper scale and write a result CSV
  check      audit a result CSV for the expected comparative trends
  trace-dump execute a single scenario with tracing and dump newline-
             delimited JSON message records

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 trend check failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .scenario import ConfigError, load_config, read_csv, write_csv
from .experiments import (
    FIGURES,
    SCALES,
    report_check,
    run_grid,
    run_point,
    sweep_points,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="damtsim",
        description=("Deterministic simulator for semantic data-source "
                     "discovery across organization overlays."),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON scenario config")
    p_run.add_argument("--config", required=True, help="path to JSON config")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the seed of every grid point")
    p_run.add_argument("--reps", type=int, default=1,
                       help="repetitions per grid point (seed offset by rep)")

    p_sweep = sub.add_parser("sweep", help="run a pre-defined figure sweep")
    p_sweep.add_argument("--figure", required=True, choices=FIGURES)
    p_sweep.add_argument("--scale", choices=SCALES, default="desk")
    p_sweep.add_argument("--seed", type=int, default=1)
    p_sweep.add_argument("--reps", type=int, default=1)
    p_sweep.add_argument("--out", required=True, help="output CSV path")

    p_check = sub.add_parser("check", help="audit a result CSV")
    p_check.add_argument("--csv", required=True, help="result CSV to audit")

    p_trace = sub.add_parser("trace-dump",
                             help="run one scenario and dump message records")
    p_trace.add_argument("--config", required=True,
                         help="JSON config expanding to exactly one point")
    p_trace.add_argument("--out", required=True, help="output NDJSON path")
    p_trace.add_argument("--seed", type=int, default=None)
    return parser


def _reseed(points, seed):
    if seed is None:
        return points
    from dataclasses import replace
    return [replace(p, seed=seed) for p in points]


def _cmd_run(args) -> int:
    points = _reseed(load_config(args.config), args.seed)
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    rows = run_grid(points, reps=args.reps)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    points = sweep_points(args.figure, scale=args.scale, seed=args.seed)
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    rows = run_grid(points, reps=args.reps)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_check(args) -> int:
    rows = read_csv(args.csv)
    report = report_check(rows)
    for line in report.lines():
        print(line)
    if not report.ok:
        return EXIT_CHECK_FAILED
    print(f"all {len(report.items)} checks passed")
    return EXIT_OK


def _cmd_trace(args) -> int:
    points = _reseed(load_config(args.config), args.seed)
    if len(points) != 1:
        raise ConfigError(
            f"trace-dump needs a single-point config, got {len(points)} points")
    _, sysm = run_point(points[0], trace=True)
    records = sysm.engine.ledger.trace or []
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"wrote {len(records)} trace records to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "check": _cmd_check,
    "trace-dump": _cmd_trace,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; fold into the config-error code
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
