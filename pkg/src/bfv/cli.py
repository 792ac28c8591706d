"""Command-line entry point: ``bfv run <scenario.json>``."""

from __future__ import annotations

import argparse
import sys

from .errors import SchemaError
from .scenario import EXIT_USAGE, Options, run_scenario


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bfv", description="Run BFV scenario files and emit JSON reports.")
    sub = p.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("file")
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--steps", type=int, default=1000, help="RK4 steps for numeric flows")
    run.add_argument("--nil-cap", type=int, default=64, help="Dyson iteration cap")
    run.add_argument("--tol", type=float, default=1e-6, help="numeric cross-check tolerance")
    run.add_argument("--no-timing", action="store_true", help="omit the timing block")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    if args.steps < 1 or args.nil_cap < 1 or args.tol <= 0:
        print("bfv: --steps and --nil-cap must be positive, --tol must be > 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_scenario(args.file, Options(args.steps, args.nil_cap, args.tol))
    except SchemaError as exc:
        print(f"bfv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bfv: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.to_json(timing=not args.no_timing)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
