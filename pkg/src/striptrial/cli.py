"""Command-line entry points for the simulation pipeline.

Subcommands `simulate`, `fit`, `score` and `report` run one stage each
against an output directory; `run` composes all four.  Any error exits
nonzero after printing a machine-readable JSON record on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, load_config
from .gwr import AICC_PAPER_LITERAL, AICC_STANDARD
from .pipeline import (
    PipelineError,
    run_pipeline,
    stage_fit,
    stage_report,
    stage_score,
    stage_simulate,
)

_CONFIG_DIR = os.path.join(os.path.dirname(__file__), "configs")


def bundled_config_path(name: str) -> str:
    """Path of a bundled config (`smoke` or `paper`)."""
    return os.path.join(_CONFIG_DIR, f"{name}.json")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="striptrial",
        description="Simulate strip trials and score designs with GWR.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "simulate, fit, score and report in one go"),
        ("simulate", "generate per-trial CSVs"),
        ("fit", "fit GWR to stored trials"),
        ("score", "compute coefficient MSE from stored fits"),
        ("report", "aggregate scores into tables and figures"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file (defaults embed the study setup)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes (default: available cores)")
        p.add_argument("--out", required=True, help="existing output directory")
        p.add_argument("--emit-trials", action="store_true",
                       help="keep per-trial CSVs after a full run")
        p.add_argument("--bandwidth", type=float,
                       help="fit stage only: restrict to this fixed bandwidth")
        p.add_argument("--aicc-formula", choices=[AICC_STANDARD, AICC_PAPER_LITERAL],
                       help="AICc variant used in bandwidth selection")
    return parser


def _load(args):
    config = load_config(args.config) if args.config else load_config({})
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.aicc_formula is not None:
        overrides["aicc_formula"] = args.aicc_formula
    if getattr(args, "bandwidth", None) is not None:
        overrides["bandwidth_policies"] = ["fixed5"]
        overrides["fixed_bandwidths"] = {"fixed5": args.bandwidth, "fixed9": 9.0}
    if overrides:
        merged = dict(config.raw)
        merged.update(overrides)
        config = load_config(merged)
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load(args)
        if args.command == "run":
            run_pipeline(config, args.out, threads=args.threads, emit_trials=args.emit_trials)
        elif args.command == "simulate":
            stage_simulate(config, args.out, threads=args.threads)
        elif args.command == "fit":
            stage_fit(config, args.out, threads=args.threads)
        elif args.command == "score":
            stage_score(config, args.out)
        elif args.command == "report":
            stage_report(config, args.out)
    except (ConfigError, PipelineError, OSError, ValueError, ArithmeticError) as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
