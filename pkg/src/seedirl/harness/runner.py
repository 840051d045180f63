"""Pipeline stages behind run_experiment, and the ablation suite on top.

A run directory is self-describing: the config snapshot, format notes, and
every stage artifact live under it. Metrics land in CSV files written with
repr-rendered floats so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from ..airl import (DiscriminatorModel, airl_train, pool_shape, pooled_dim,
                    retrain_on_procenv, select_reward_checkpoint)
from ..checkpoint import load_params, save_params
from ..demos import (DemonstrationSet, load_demos, persist_demos,
                     sample_demonstrations, train_expert)
from ..envs import (EnvMode, load_seed_env, make_seed_env, save_seed_env,
                    task_by_name)
from ..errors import ConfigurationError, StageError
from ..gail import gail_train, gail_transfer_eval
from ..networks import NetworkSpec
from ..policy import PolicyModel, evaluate_policy, make_policy
from ..rng import split_seed
from ..autodiff import Tensor
from .config import (ExperimentConfig, config_text, to_airl_config,
                     to_expert_config)

CONFIG_FILE = "config.ini"
FORMATS_FILE = "formats.txt"
EXPERT_CKPT = "expert_policy.ckpt"
DEMOS_FILE = "demos.txt"
SEED_ENV_FILE = "seed_env.txt"
METRICS_FILE = "metrics.csv"
TIMINGS_FILE = "timings.csv"
REWARD_CKPT = "reward.ckpt"
POLICY_CKPT = "transfer_policy.ckpt"
RETRAIN_METRICS_FILE = "retrain_metrics.csv"
SUMMARY_FILE = "summary.csv"

METRICS_COLUMNS = ("iteration", "disc_loss", "mean_learned_reward", "env_eval")

# split_seed indices, one per pipeline stage
_EXPERT_SEED, _ENV_SEED, _DEMO_SEED, _IRL_SEED, _RETRAIN_SEED, _EVAL_SEED = \
    range(1, 7)


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_csv(path: Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    path.write_text(buf.getvalue())


def write_metrics_csv(path: Path, metrics: list[dict]) -> None:
    write_csv(path, METRICS_COLUMNS, metrics)


def read_summary(run_dir: str | Path) -> dict:
    path = Path(run_dir) / SUMMARY_FILE
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise ConfigurationError(f"{path}: expected exactly one summary row")
    out = dict(rows[0])
    for key, value in out.items():
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                pass
    return out


def save_policy(path: Path, policy: PolicyModel) -> None:
    merged = {f"pi.{k}": v for k, v in policy.policy_params.items()}
    merged.update({f"v.{k}": v for k, v in policy.value_params.items()})
    save_params(path, merged)


def load_policy(path: Path, config: ExperimentConfig) -> PolicyModel:
    spec = task_by_name(config.task)
    policy = make_policy(spec, hidden=config.hidden, seed=0)
    loaded = load_params(path)
    for k, t in policy.policy_params.items():
        t.data = loaded[f"pi.{k}"].data
    for k, t in policy.value_params.items():
        t.data = loaded[f"v.{k}"].data
    return policy


def save_reward_model(path: Path, model: DiscriminatorModel) -> None:
    merged = {f"r.{k}": v for k, v in model.reward_params.items()}
    merged.update({f"p.{k}": v for k, v in model.shaping_params.items()})
    save_params(path, merged)


def load_reward_model(path: Path, config: ExperimentConfig) -> DiscriminatorModel:
    spec = task_by_name(config.task)
    in_dim = pooled_dim(spec) if config.disc_pool else spec.reward_obs_dim
    net = NetworkSpec(in_dim=in_dim, hidden=config.disc_hidden, out_dim=1)
    loaded = load_params(path, requires_grad=True)
    reward = {k[2:]: v for k, v in loaded.items() if k.startswith("r.")}
    shaping = {k[2:]: v for k, v in loaded.items() if k.startswith("p.")}
    return DiscriminatorModel(net=net, reward_params=reward,
                              shaping_params=shaping, gamma=config.gamma,
                              use_shaping=config.use_shaping,
                              obs_dim=spec.reward_obs_dim,
                              pool=pool_shape(spec) if config.disc_pool else None)


def _stage(tag: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(tag, exc) from exc


def run_name(config: ExperimentConfig) -> str:
    return (f"{config.task}-{config.method}-n{config.n}"
            f"-s{config.master_seed}")


def _write_formats(run_dir: Path) -> None:
    (run_dir / FORMATS_FILE).write_text(
        "demos: demos-v1\nseed_env: seedenv-v1\ncheckpoints: SDP1 v1\n"
        "metrics: csv " + ",".join(METRICS_COLUMNS) + "\n")


def stage_expert(config: ExperimentConfig, run_dir: Path
                 ) -> tuple[PolicyModel, float]:
    spec = task_by_name(config.task)
    policy, _ = train_expert(spec, to_expert_config(config),
                             seed=split_seed(config.master_seed, _EXPERT_SEED))
    mean, _ = evaluate_policy(
        policy, EnvMode(spec), config.final_eval_episodes,
        np.random.default_rng(split_seed(config.master_seed, _EVAL_SEED)))
    save_policy(run_dir / EXPERT_CKPT, policy)
    return policy, mean


def stage_demos(config: ExperimentConfig, run_dir: Path,
                expert: PolicyModel) -> DemonstrationSet:
    spec = task_by_name(config.task)
    env = make_seed_env(spec, config.n,
                        master_seed=split_seed(config.master_seed, _ENV_SEED))
    rng = np.random.default_rng(split_seed(config.master_seed, _DEMO_SEED))
    demos = sample_demonstrations(expert, env, rng)
    save_seed_env(run_dir / SEED_ENV_FILE, env)
    persist_demos(run_dir / DEMOS_FILE, demos)
    return demos


def stage_reward_learning(config: ExperimentConfig, run_dir: Path,
                          demos: DemonstrationSet):
    """AIRL arms return the selected DiscriminatorModel; GAIL returns its
    trained seed-level policy."""
    spec = task_by_name(config.task)
    seed = split_seed(config.master_seed, _IRL_SEED)
    acfg = to_airl_config(config)
    if config.reward_learning_is_procedural:
        mode = EnvMode(spec)
    else:
        mode = EnvMode(spec, demos.seed_env)

    if config.method == "gail":
        result = gail_train(spec, mode, demos, acfg, seed=seed)
        trained = result.policy
        save_policy(run_dir / POLICY_CKPT, trained)
    else:
        result = airl_train(spec, mode, demos, acfg, seed=seed)
        trained = select_reward_checkpoint(result.store)
        save_reward_model(run_dir / REWARD_CKPT, trained)
    write_metrics_csv(run_dir / METRICS_FILE, result.metrics)
    write_csv(run_dir / TIMINGS_FILE, ("iteration", "wall_ms"),
              [{"iteration": i, "wall_ms": ms}
               for i, ms in enumerate(result.timings_ms)])
    min_loss = min(m["disc_loss"] for m in result.metrics)
    return trained, result, min_loss


def stage_transfer(config: ExperimentConfig, run_dir: Path, trained,
                   irl_result) -> tuple[float, float]:
    spec = task_by_name(config.task)
    seed = split_seed(config.master_seed, _RETRAIN_SEED)
    if config.method == "gail":
        mean, std = gail_transfer_eval(
            irl_result, spec, episodes=config.final_eval_episodes, seed=seed)
        return mean, std
    policy, (mean, std), retrain_metrics = retrain_on_procenv(
        trained, spec, to_airl_config(config, for_retraining=True),
        seed=seed, eval_episodes=config.final_eval_episodes)
    save_policy(run_dir / POLICY_CKPT, policy)
    write_csv(run_dir / RETRAIN_METRICS_FILE, ("iteration", "env_eval"),
              retrain_metrics)
    return mean, std


def run_experiment(config: ExperimentConfig, out_root: str | Path,
                   name: str | None = None) -> Path:
    """Execute the configured pipeline; returns the run directory.

    Stage failures raise StageError with the stage tag; artifacts written
    before the failure stay on disk.
    """
    run_dir = Path(out_root) / (name or run_name(config))
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / CONFIG_FILE).write_text(config_text(config))
    _write_formats(run_dir)

    expert, expert_return = _stage("expert", stage_expert, config, run_dir)
    summary = {
        "task": config.task, "method": config.method, "n": config.n,
        "master_seed": config.master_seed,
        "expert_proc_return": expert_return,
    }
    if config.method == "expert-only":
        write_csv(run_dir / SUMMARY_FILE, tuple(summary), [summary])
        return run_dir

    demos = _stage("demos", stage_demos, config, run_dir, expert)
    trained, irl_result, min_loss = _stage(
        "train-irl", stage_reward_learning, config, run_dir, demos)
    mean, std = _stage("transfer", stage_transfer, config, run_dir, trained,
                       irl_result)

    summary.update({
        "demo_mean_return": demos.mean_return(),
        "min_disc_loss": min_loss,
        "method_proc_return": mean,
        "method_proc_std": std,
        "expert_fraction": (mean / expert_return if expert_return > 0
                            else float("nan")),
    })
    write_csv(run_dir / SUMMARY_FILE, tuple(summary), [summary])
    return run_dir


SUITE_FILE = "suite.csv"
TABLE_FILE = "table.csv"


def run_ablation_suite(task: str, seeds: list[int], n_grid: list[int],
                       out_root: str | Path,
                       methods: tuple[str, ...] = ("de-airl",
                                                   "airl-no-shaping",
                                                   "naive-airl", "gail"),
                       base_config: ExperimentConfig | None = None) -> Path:
    """Paired runs over seeds: every method at the base n, plus DE-AIRL at
    each n in the grid. Emits per-run rows and a per-(method, n) aggregate."""
    if len(seeds) < 2:
        raise ConfigurationError("need at least 2 seeds for paired runs")
    from .config import default_config, with_overrides
    base = base_config or default_config(task)
    out_root = Path(out_root)
    rows = []
    for seed in seeds:
        for method in methods:
            ns = sorted(set(n_grid)) if method == "de-airl" else [base.n]
            for n in ns:
                cfg = with_overrides(base, method=method, n=n,
                                     master_seed=seed)
                run_dir = run_experiment(cfg, out_root)
                summary = read_summary(run_dir)
                summary["run_dir"] = run_dir.name
                rows.append(summary)

    columns = ("task", "method", "n", "master_seed", "expert_proc_return",
               "method_proc_return", "expert_fraction", "run_dir")
    write_csv(out_root / SUITE_FILE, columns, rows)

    table_rows = []
    for method in methods:
        for n in sorted({r["n"] for r in rows if r["method"] == method}):
            grp = [r for r in rows
                   if r["method"] == method and r["n"] == n]
            returns = [r["method_proc_return"] for r in grp]
            fracs = [r["expert_fraction"] for r in grp]
            table_rows.append({
                "task": task, "method": method, "n": n,
                "runs": len(grp),
                "mean_return": float(np.mean(returns)),
                "std_return": float(np.std(returns)),
                "median_expert_fraction": float(np.median(fracs)),
            })
    write_csv(out_root / TABLE_FILE,
              ("task", "method", "n", "runs", "mean_return", "std_return",
               "median_expert_fraction"), table_rows)
    return out_root / SUITE_FILE