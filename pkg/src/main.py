#!/usr/bin/env python3
"""
hpr - hypercomplex phase retrieval
Command-line entry point
"""

import argparse
import logging
import os
import sys
from typing import Optional

# Add src directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.commands import COMMANDS, EXIT_CONFIG, build_config, run_command
from errors import ConfigError
from harness import ALL_SOLVERS
from sensing import ModelKind

LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file, or the name of a bundled config such as qwf_gaussian")
    common.add_argument("--seed", type=int, help="master seed (falls back to $HPR_SEED)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads, 0 = one per core")
    common.add_argument("--solver", choices=ALL_SOLVERS)
    common.add_argument("--model", choices=[kind.value for kind in ModelKind])
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key, e.g. --set solver.step_size=0.05")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    noise.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(prog="hpr", description="Hypercomplex phase retrieval experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "phase-transition sweep over m/n",
        "snr": "success rate against SNR",
        "recover": "patch-wise image recovery",
        "selftest": "algebra, transform and gradient invariants",
        "gradcheck": "finite-difference check of every solver gradient",
    }
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def _verbosity(args) -> Optional[str]:
    if args.verbose:
        return "debug"
    if args.quiet:
        return "warning"
    return None


def main(argv=None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    try:
        config = build_config(
            args.config,
            args.overrides,
            seed=args.seed,
            out=args.out,
            threads=args.threads,
            solver=args.solver,
            model=args.model,
            verbosity=_verbosity(args),
        )
        level = LOG_LEVELS.get(config.get("run.verbosity"))
        if level is None:
            raise ConfigError(f"Unknown verbosity {config.get('run.verbosity')!r}, expected one of {', '.join(LOG_LEVELS)}")
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG

    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return run_command(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
