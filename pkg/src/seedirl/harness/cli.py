"""Command-line entry point.

Subcommands cover each pipeline stage plus the suite and reporting:

    seedirl expert    --config cfg.ini --out runs/r1
    seedirl demos     --config cfg.ini --out runs/r1
    seedirl train-irl --config cfg.ini --out runs/r1
    seedirl retrain   --config cfg.ini --out runs/r1
    seedirl eval      --config cfg.ini --out runs/r1 [--ckpt file]
    seedirl ablate    --task multiroom-7 --seeds 0 1 2 --n-grid 6 12 24 --out runs/suite
    seedirl report    --runs runs/r1 runs/r2 --out runs/report

`run` executes every stage in order. Config files are INI text; any field
can also be overridden on the command line with `--set key=value`. The
output root falls back to the SEEDIRL_OUT environment variable, then to
`./runs`. Exit codes: 0 success, 2 bad configuration, 3 stage failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from ..envs import EnvMode, load_seed_env, task_by_name
from ..errors import (ConfigurationError, FormatVersionError, IntegrityError,
                      SeedIrlError, StageError)
from ..demos import load_demos
from ..policy import evaluate_policy
from ..rng import split_seed
from . import runner
from .config import (ExperimentConfig, default_config, load_config,
                     parse_overrides)
from .report import emit_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


def _resolve_out(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get("SEEDIRL_OUT", "runs"))


def _load_cfg(args) -> ExperimentConfig:
    overrides = parse_overrides(args.set or [])
    if args.config:
        return load_config(args.config, **overrides)
    task = overrides.pop("task", "multiroom-7")
    method = overrides.pop("method", "de-airl")
    return default_config(task, method, **overrides)


def _stage_dir(args, config: ExperimentConfig) -> Path:
    out = _resolve_out(args)
    run_dir = out if args.config or out.name.startswith(config.task) \
        else out / runner.run_name(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def cmd_run(args) -> int:
    config = _load_cfg(args)
    run_dir = runner.run_experiment(config, _resolve_out(args))
    summary = runner.read_summary(run_dir)
    for key, value in summary.items():
        print(f"{key}: {value}")
    print(f"run directory: {run_dir}")
    return EXIT_OK


def cmd_expert(args) -> int:
    config = _load_cfg(args)
    run_dir = _stage_dir(args, config)
    _, mean = runner.stage_expert(config, run_dir)
    print(f"expert ProcEnv return: {mean}")
    print(f"checkpoint: {run_dir / runner.EXPERT_CKPT}")
    return EXIT_OK


def cmd_demos(args) -> int:
    config = _load_cfg(args)
    run_dir = _stage_dir(args, config)
    expert = runner.load_policy(run_dir / runner.EXPERT_CKPT, config)
    demos = runner.stage_demos(config, run_dir, expert)
    print(f"sampled {demos.n} demonstrations, mean return "
          f"{demos.mean_return()}")
    return EXIT_OK


def cmd_train_irl(args) -> int:
    config = _load_cfg(args)
    run_dir = _stage_dir(args, config)
    demos = load_demos(run_dir / runner.DEMOS_FILE)
    trained, result, min_loss = runner.stage_reward_learning(
        config, run_dir, demos)
    print(f"trained {config.method} for {config.irl_iterations} iterations; "
          f"min discriminator loss {min_loss}")
    return EXIT_OK


def cmd_retrain(args) -> int:
    config = _load_cfg(args)
    run_dir = _stage_dir(args, config)
    if config.method == "gail":
        print("gail transfers its policy directly; nothing to retrain")
        return EXIT_OK
    model = runner.load_reward_model(run_dir / runner.REWARD_CKPT, config)
    mean, std = runner.stage_transfer(config, run_dir, model, None)
    print(f"retrained ProcEnv return: {mean} +- {std}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_cfg(args)
    run_dir = _stage_dir(args, config)
    ckpt = Path(args.ckpt) if args.ckpt else run_dir / runner.POLICY_CKPT
    policy = runner.load_policy(ckpt, config)
    spec = task_by_name(config.task)
    rng = np.random.default_rng(split_seed(config.master_seed, 6))
    mean, std = evaluate_policy(policy, EnvMode(spec),
                                config.final_eval_episodes, rng)
    print(f"ProcEnv return over {config.final_eval_episodes} episodes: "
          f"{mean} +- {std}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    overrides = parse_overrides(args.set or [])
    base = default_config(args.task, **overrides)
    suite = runner.run_ablation_suite(
        args.task, seeds=args.seeds, n_grid=args.n_grid or [base.n],
        out_root=_resolve_out(args), methods=tuple(args.methods),
        base_config=base)
    print(f"suite written: {suite}")
    return EXIT_OK


def cmd_report(args) -> int:
    manifest = emit_report(args.runs, _resolve_out(args))
    for path in manifest["plots"]:
        print(f"plot: {path}")
    if manifest["csv"]:
        print(f"csv: {manifest['csv']}")
    for name, err in manifest["errors"].items():
        print(f"skipped {name}: {err}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seedirl",
        description="Reward learning from few fixed levels, with transfer "
                    "to the full procedural distribution.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field")
        p.add_argument("--out", help="output directory "
                       "(default $SEEDIRL_OUT or ./runs)")

    for name, fn in (("run", cmd_run), ("expert", cmd_expert),
                     ("demos", cmd_demos), ("train-irl", cmd_train_irl),
                     ("retrain", cmd_retrain)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("eval")
    common(p)
    p.add_argument("--ckpt", help="policy checkpoint to evaluate")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate")
    p.add_argument("--task", required=True)
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.add_argument("--n-grid", type=int, nargs="*")
    p.add_argument("--methods", nargs="+",
                   default=["de-airl", "airl-no-shaping", "naive-airl",
                            "gail"])
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("report")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, FormatVersionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_STAGE
    except (SeedIrlError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())