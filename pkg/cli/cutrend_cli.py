#!/usr/bin/env python3
"""
CUTrend CLI - Command Line Interface
Main CLI for estimating condom-use trends from HIV prevalence surveys.
"""

import argparse
import json
import sys
from typing import Any, Callable, Dict, List, Optional

from cli.commands import failure
from cli.commands.ensemble import ensemble_command
from cli.commands.fit import fit_command
from cli.commands.prior_check import prior_check_command
from cli.commands.report import report_command
from cli.commands.simulate import simulate_command
from cutrend.inference.theta import INFERENCE_MODELS
from cutrend.io.config import RunConfig, apply_overrides, load_config
from cutrend.utils.logging import configure_logging

COMMANDS: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
    "fit": fit_command,
    "simulate": simulate_command,
    "ensemble": ensemble_command,
    "prior-check": prior_check_command,
    "report": report_command,
}


def _run_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--config", type=str, help="Path to the YAML run configuration")
    options.add_argument("--seed", type=int, help="Master seed (unsigned 64-bit)")
    options.add_argument("--out", type=str, help="Output directory")
    options.add_argument("--model", choices=list(INFERENCE_MODELS), help="Restrict to one trajectory model")
    options.add_argument("--particles", type=int, help="Particle count N")
    options.add_argument("--iterations", type=int, help="PMMH iterations M")
    options.add_argument("--threads", type=int, help="Worker count (default: $CUTREND_THREADS or 1)")
    options.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    return options


def create_parser() -> argparse.ArgumentParser:
    """Create the main argument parser."""
    parser = argparse.ArgumentParser(
        prog="cutrend",
        description="Condom-use trend estimation from HIV prevalence surveys",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  cutrend prior-check --model bm                     # Prior-implied ΔCU quantiles
  cutrend simulate --out sim --seed 7                # Synthetic dataset with known truth
  cutrend fit --data sim/observations.csv --out fit  # Fit all trajectory models
  cutrend ensemble --config configs/default_config.yaml --threads 8
  cutrend report --fit-dir fit --ensemble-dir ens --out claims
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    options = _run_options()

    fit_parser = subparsers.add_parser("fit", parents=[options], help="Fit trajectory models to survey data")
    fit_parser.add_argument("--data", type=str, help="Observation CSV (overrides fit.observations)")

    simulate_parser = subparsers.add_parser("simulate", parents=[options], help="Simulate a synthetic dataset")
    simulate_parser.add_argument("--bin", type=int, dest="target_bin", help="ΔCU bin of the truth")

    subparsers.add_parser("ensemble", parents=[options], help="Evaluate the methods on simulated replicates")
    subparsers.add_parser("prior-check", parents=[options], help="Prior-implied ΔCU quantiles")

    report_parser = subparsers.add_parser("report", parents=[options], help="Supported ΔCU lower bounds")
    report_parser.add_argument("--fit-dir", type=str, help="Output directory of a fit run")
    report_parser.add_argument("--ensemble-dir", type=str, help="Output directory of an ensemble run")
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Load the configuration file and apply the command-line overrides."""
    sections = {
        "simulate": {"target_bin": getattr(args, "target_bin", None)},
        "report": {
            "fit_dir": getattr(args, "fit_dir", None),
            "ensemble_dir": getattr(args, "ensemble_dir", None),
        },
    }
    return apply_overrides(
        load_config(args.config),
        workflow=args.command,
        seed=args.seed,
        out=args.out,
        model=args.model,
        particles=args.particles,
        iterations=args.iterations,
        threads=args.threads,
        observations=getattr(args, "data", None),
        sections=sections,
    )


def _report_failure(result: Dict[str, Any]) -> int:
    print(json.dumps({"error": result["error"], "message": result["message"]}), file=sys.stderr)
    return int(result["exit_code"])


def run(config: RunConfig) -> int:
    """
    Execute the configured workflow.

    Returns:
        Process exit status: 0 success, 2 configuration, 3 data, 4 numerical failure
    """
    command = COMMANDS[config.workflow]
    result = command(config)
    if not result["success"]:
        print(f"❌ {config.workflow} failed: {result['message']}")
        return _report_failure(result)
    print(f"✅ {config.workflow} completed, artifacts in {result['output_dir']}")
    for key in ("models", "claims", "metrics"):
        if key in result:
            print(json.dumps(result[key], indent=2, default=str))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    try:
        config = build_config(args)
    except Exception as e:
        return _report_failure(failure(e))

    configure_logging(
        "DEBUG" if args.verbose else config.logging.level,
        config.logging.format,
        config.logging.file,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
