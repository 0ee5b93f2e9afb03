"""Command line entry point: ``semiflow run | list-checks | validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from .checks import CHECKS
from .config import ConfigError, SeedSpec, load_config
from .report import export
from .runner import SeedFailure, run

__all__ = ["main"]


def _seeds(text: str) -> list[int]:
    """``1,2,5`` or ``0:200`` (half-open range)."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(s) for s in text.split(",") if s.strip()]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semiflow", description="Finite-mode stochastic cocycle experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the checks of a config")
    r.add_argument("config")
    r.add_argument("--seeds", type=_seeds, help="override seeds: '1,2,3' or 'lo:hi'")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out-dir")
    r.add_argument("--format", choices=["csv", "json", "both"])
    sub.add_parser("list-checks", help="list registered checks")
    v = sub.add_parser("validate", help="validate a config without running it")
    v.add_argument("config")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list-checks":
        for name, c in CHECKS.items():
            eqs = ", ".join(c.equations) if c.equations else "any"
            print(f"{name:24s} [{eqs}] {c.description}")
        return 0
    try:
        overrides = None
        if getattr(args, "seeds", None):
            overrides = {"seeds": SeedSpec(values=args.seeds).model_dump(exclude_none=True)}
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"{args.config}: ok ({cfg.equation}, {len(cfg.checks)} checks, {len(cfg.seed_list())} seeds)")
        return 0
    try:
        report = run(cfg, workers=args.workers)
    except (SeedFailure, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out_dir or cfg.output.out_dir
    export(report, out_dir, args.format or cfg.output.format)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  ({c.tolerance})")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
