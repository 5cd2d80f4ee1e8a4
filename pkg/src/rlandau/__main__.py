"""Command-line entry point: `rlandau <subcommand> [--config file.toml]`."""

from __future__ import annotations

import argparse
import os
import sys


def _cap_threads() -> None:
    cap = os.environ.get("LANDAU_THREADS")
    if cap:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ.setdefault(var, cap)


def main(argv=None) -> int:
    _cap_threads()
    # imports happen after the thread cap so BLAS pools honor it
    from .config import ConfigError, load_config
    from .harness import (
        EXIT_CONFIG,
        EXIT_NUMERICAL,
        EXIT_PREREQ,
        SUBCOMMANDS,
        PrerequisiteError,
        run_subcommand,
    )

    parser = argparse.ArgumentParser(
        prog="rlandau",
        description="Deterministic toolkit for the relativistic Landau equation",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument(
            "--config",
            default=None,
            help="TOML run configuration (defaults apply when omitted)",
        )
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_subcommand(args.subcommand, cfg)
    except PrerequisiteError as exc:
        print(f"prerequisite missing: {exc}", file=sys.stderr)
        return EXIT_PREREQ
    except (RuntimeError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
