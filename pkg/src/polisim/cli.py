"""Command-line interface.

Subcommands:
  run        one simulation run -> run_0.csv + manifest
  batch      seeded batch with aggregation -> run_<i>.csv, summary.csv, manifest
  validate   parse and check a config file
  scenarios  list built-in scenarios

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, parse_config
from .harness import default_out_dir, run_batch, run_single, write_outputs
from .metrics import summarize
from .scenarios import load_scenario, scenario_names


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    if args.config is None:
        raise ConfigError("provide --config FILE or --scenario NAME")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc}") from exc
    return parse_config(text)


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="F", help="scenario TOML file")
    parser.add_argument("--scenario", metavar="NAME",
                        help="built-in scenario (see 'scenarios list')")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polisim",
        description="Needs-driven epidemic and economy policy simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single run")
    _add_config_args(p_run)
    p_run.add_argument("--seed", type=int, default=None, metavar="N")
    p_run.add_argument("--out", default=None, metavar="D")

    p_batch = sub.add_parser("batch", help="execute a seeded batch")
    _add_config_args(p_batch)
    p_batch.add_argument("--runs", type=int, default=None, metavar="N")
    p_batch.add_argument("--base-seed", type=int, default=None, metavar="N")
    p_batch.add_argument("--out", default=None, metavar="D")
    p_batch.add_argument("--parallel", type=int, default=1, metavar="N")

    p_val = sub.add_parser("validate", help="check a config file")
    _add_config_args(p_val)

    p_sc = sub.add_parser("scenarios", help="built-in scenario operations")
    p_sc.add_argument("action", choices=["list"])

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    try:
        if args.command == "scenarios":
            for name in scenario_names():
                print(name)
            return 0

        config = _load_config(args)

        if args.command == "validate":
            print("ok")
            return 0

        out_dir = args.out or default_out_dir()
        if args.command == "run":
            seed = args.seed if args.seed is not None else config.run.base_seed
            try:
                metrics = run_single(config, seed)
                summary = summarize([metrics])
                write_outputs([metrics], summary, out_dir, config)
            except ConfigError:
                raise
            except Exception as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            return 0

        if args.command == "batch":
            if args.runs is not None:
                config.run.runs = args.runs
            if args.base_seed is not None:
                config.run.base_seed = args.base_seed
            try:
                summary, per_run = run_batch(config, parallel=args.parallel)
                write_outputs(per_run, summary, out_dir, config)
            except ConfigError:
                raise
            except Exception as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:  # console entry point
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
