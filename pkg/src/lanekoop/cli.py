"""Command-line interface.

    lanekoop generate|identify|evaluate|run-all --config cfg.yaml [options]

Exit codes: 0 success, 1 invariant failure, 2 config error, 3 I/O error.
"""

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, default_config, load_config
from .pipeline import InvariantError, run_all, run_evaluate, run_generate, run_identify


def build_parser():
    p = argparse.ArgumentParser(
        prog="lanekoop",
        description="Lane-change EDMD pipeline with truncated-SVD analysis",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("generate", "synthesize the trajectory dataset"),
        ("identify", "lift, factorize, and fit system matrices"),
        ("evaluate", "benchmark and emit the comparison table"),
        ("run-all", "run all three stages in sequence"),
    ]:
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", help="YAML experiment config (defaults if omitted)")
        s.add_argument("--seed", type=int, help="override the master seed")
        s.add_argument("--out", help="override the output directory")
        s.add_argument(
            "--energy-slack", type=float, dest="energy_slack",
            help="percentage points subtracted from energy thresholds",
        )
        s.add_argument(
            "--time-scope", choices=["solve", "svd+solve"], dest="time_scope",
            help="what the timed region includes",
        )
        s.add_argument(
            "--energy-squared", action="store_true", dest="energy_squared",
            help="accumulate squared singular values in the energy profile",
        )
    return p


def _resolve_config(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if args.energy_slack is not None:
        cfg = replace(cfg, energy_slack=args.energy_slack)
    if args.time_scope is not None:
        cfg = replace(cfg, time_scope=args.time_scope)
    if args.energy_squared:
        cfg = replace(cfg, energy_squared=True)
    return cfg


STAGES = {
    "generate": run_generate,
    "identify": run_identify,
    "evaluate": run_evaluate,
    "run-all": run_all,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        STAGES[args.command](cfg, cfg.output_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except InvariantError as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return 1
    except (OSError, FileNotFoundError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
