"""Command line entry point: one subcommand per experiment.

    curvature-lab <experiment> [--config FILE] [--set key=value ...] --out DIR

Exit status is 0 iff every non-conditional check passed.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    EXPERIMENTS,
    apply_overrides,
    default_config,
    parse_config,
    run,
)
from .manifolds import GeometryError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvature-lab",
                                     description=__doc__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in sorted(EXPERIMENTS):
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry")
        p.add_argument("--out", default="out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config) as fh:
                cfg = parse_config(fh.read(), experiment=args.experiment)
        else:
            cfg = default_config(args.experiment)
        cfg = apply_overrides(cfg, args.set)
        report = run(cfg, args.out)
    except (GeometryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for res in report.results:
        status = "PASS" if res["pass"] else "FAIL"
        if res.get("conditional"):
            status += " (conditional)"
        print(f"[{report.experiment}] {res['name']}: {status}")
    print(f"[{report.experiment}] wall time {report.wall_time:.2f}s; "
          f"outputs in {args.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
