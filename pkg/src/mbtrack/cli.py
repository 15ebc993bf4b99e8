"""Command-line harness: single runs, Monte-Carlo batches, parameter
sweeps, and preset export.

Exit codes: 0 on success, 2 for configuration problems, 3 for runtime
failures.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import harness, scenario
from .errors import ConfigError, MbTrackError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _load(args) -> scenario.ScenarioConfig:
    config = scenario.load_config(args.scenario)
    if getattr(args, "seed", None) is not None:
        config = scenario.override(config, "seed", args.seed)
    return config


def _cmd_run(args) -> int:
    config = _load(args)
    records = harness.run_scenario(config)
    harness.write_steps_csv(records, args.out, include_timing=args.timing)
    print(f"wrote {len(records)} steps to {args.out} (scenario {config.name}, seed {config.seed})")
    return EXIT_OK


def _cmd_mc(args) -> int:
    config = _load(args)
    result = harness.run_monte_carlo(config, runs=args.runs, parallelism=args.parallel)
    harness.write_aggregate_csv(result, args.out, include_timing=args.timing)
    print(
        f"wrote per-step aggregates over {result.runs} runs to {args.out} "
        f"(scenario {config.name}, base seed {config.seed})"
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args)
    values = [_parse_value(v) for v in args.values.split(",") if v != ""]
    if not values:
        raise ConfigError("sweep needs at least one value")
    lines = [",".join(("param_value",) + harness.AGGREGATE_CSV_COLUMNS)]
    for value in values:
        swept = scenario.override(config, args.param, value)
        result = harness.run_monte_carlo(swept, runs=args.runs, parallelism=args.parallel)
        for row in harness.aggregate_csv_rows(result, include_timing=args.timing):
            lines.append(",".join([str(value)] + row))
        window = result.ospa_mean[len(result.ospa_mean) // 2 :]
        print(f"{args.param}={value}: late-window mean OSPA {window.mean():.6g}")
    with open(args.out, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote sweep table to {args.out}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    os.makedirs(args.dir, exist_ok=True)
    for name in scenario.PRESET_NAMES:
        path = os.path.join(args.dir, f"{name}.json")
        with open(path, "w") as fh:
            fh.write(scenario.preset_json(name))
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbtrack",
        description="Multi-Bernoulli multi-target tracking with sensor control",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single closed-loop run, per-step CSV")
    run.add_argument("--scenario", required=True, help="scenario JSON file")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default="steps.csv", help="output CSV path")
    run.add_argument(
        "--timing",
        action="store_true",
        help="write measured control wall times (breaks byte-reproducibility)",
    )
    run.set_defaults(func=_cmd_run)

    mc = sub.add_parser("mc", help="Monte-Carlo batch, per-step aggregate CSV")
    mc.add_argument("--scenario", required=True)
    mc.add_argument("--runs", type=int, required=True)
    mc.add_argument("--seed", type=int, default=None)
    mc.add_argument("--parallel", type=int, default=1, help="worker processes")
    mc.add_argument("--out", default="agg.csv")
    mc.add_argument("--timing", action="store_true")
    mc.set_defaults(func=_cmd_mc)

    sweep = sub.add_parser("sweep", help="Monte-Carlo batches over a config field")
    sweep.add_argument("--scenario", required=True)
    sweep.add_argument("--param", required=True, help="dotted path, e.g. control.eta")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--runs", type=int, required=True)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--parallel", type=int, default=1)
    sweep.add_argument("--out", default="sweep.csv")
    sweep.add_argument("--timing", action="store_true")
    sweep.set_defaults(func=_cmd_sweep)

    presets = sub.add_parser("presets", help="list shipped scenarios and write their JSON")
    presets.add_argument("--dir", default=".", help="directory to write preset files into")
    presets.set_defaults(func=_cmd_presets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MbTrackError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
