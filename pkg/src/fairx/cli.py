"""Command-line entry point: ``fairx {run,grid,exposure,fixtures,validate-log}``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Sequence

import yaml

from .config import ConfigError, ExperimentConfig
from .envs import ReplayFormatError, lowerbound_fixtures, validate_replay_log
from .harness import (
    run_experiment,
    truncated_runs,
    write_exposure,
    write_summary,
    write_traces,
)


def _checkpoints(text: str):
    try:
        if "," in text:
            return [int(v) for v in text.split(",") if v.strip()]
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a count or a comma-separated list of rounds") from None


def _override(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError("overrides look like key.sub=value")
    return key, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairx", description="Fair-exposure bandit experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name: str, help_: str):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="worker processes (default: FAIRX_THREADS or 1)")
        p.add_argument("--pgd-lr", type=float, help="projected-ascent step size")
        p.add_argument("--pgd-steps", type=int, help="projected-ascent step count")
        p.add_argument("--checkpoints", type=_checkpoints, help="count of log-spaced rounds or r1,r2,...")
        p.add_argument("--set", dest="overrides", type=_override, action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field, e.g. horizon=1000")
        return p

    experiment("run", "run every algorithm with its fixed parameters on the test split")
    experiment("grid", "tune on the validation split, then run the winners on the test split")
    experiment("exposure", "run and write average exposure per arm")
    p = sub.add_parser("fixtures", help="print the lower-bound instance pairs and their optimal policies")
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--out", help="also write fixtures.csv here")
    p = sub.add_parser("validate-log", help="check a replay log's format and uniform-logging flag")
    p.add_argument("path")
    return parser


def load_config(args) -> ExperimentConfig:
    if not os.path.exists(args.config):
        raise ConfigError("", f"config file {args.config!r} not found")
    cfg = ExperimentConfig.load(args.config)
    overrides = dict(args.overrides)
    for flag, key in (("seed", "seed"), ("out", "output"), ("threads", "threads"),
                      ("pgd_lr", "pgd.step_size"), ("pgd_steps", "pgd.num_steps"),
                      ("checkpoints", "checkpoints")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    return cfg.with_overrides(overrides) if overrides else cfg


def _run(args, tune: bool, exposure: bool) -> int:
    cfg = load_config(args)
    out = cfg.output
    result = run_experiment(cfg, tune=tune, threads=args.threads)
    write_traces(os.path.join(out, "traces.csv"), result)
    write_summary(os.path.join(out, "summary.csv"), result)
    if exposure:
        write_exposure(os.path.join(out, "exposure.csv"), result)
    if tune:
        chosen = [{"algo": a, "merit": c, "params": p} for (a, c), p in result.params.items()]
        with open(os.path.join(out, "best_params.yaml"), "w") as fh:
            yaml.safe_dump(chosen, fh, sort_keys=False)
    for algo, c, seed, rounds in truncated_runs(result):
        print(f"fairx: warning: {algo} (merit {c}) seed {seed} truncated at {rounds} of "
              f"{cfg.horizon} rounds: replay log exhausted", file=sys.stderr)
    print(f"wrote results to {out}")
    return 0


def _fixtures(args) -> int:
    rows = []
    for fx in lowerbound_fixtures(args.horizon):
        pi = fx.optimal_policy
        rows.append((fx.name, fx.merit.kind, fx.merit.param, *fx.instance.means, *pi))
        print(f"{fx.name}: merit={fx.merit.kind}({fx.merit.param:g}) "
              f"means=({fx.instance.means[0]:.6g}, {fx.instance.means[1]:.6g}) "
              f"pi*=({pi[0]:.12g}, {pi[1]:.12g})")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "fixtures.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("name", "merit", "merit_param", "mean_0", "mean_1", "pi_0", "pi_1"))
            w.writerows([[repr(float(v)) if isinstance(v, float) else v for v in row] for row in rows])
    return 0


def _validate_log(args) -> int:
    log = validate_replay_log(args.path)
    print(f"{args.path}: ok, {len(log)} events, K={log.n_arms}, d={log.dim}, uniform logging")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fixtures":
            return _fixtures(args)
        if args.command == "validate-log":
            return _validate_log(args)
        return _run(args, tune=args.command == "grid", exposure=args.command == "exposure")
    except (ConfigError, ReplayFormatError) as err:
        print(f"fairx: error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as err:
        print(f"fairx: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
