"""Expert training, demonstration sampling, and the demo file format.

Experts are trained on the fully procedural task with the ground-truth
reward and must clear a per-task competence gate before demonstrations may
be sampled. A demonstration set holds exactly one stochastically sampled
expert trajectory per seed level.

File format (line-delimited text, version tag first):

    demos-v1
    task <name>
    master_seed <int>
    n <int>
    checksum <sha256 hex of every line below this one>
    level <seed>
    actions <int> <int> ...
    logps <float> <float> ...
    (level/actions/logps repeated n times)

Observations are not stored: loading replays each action sequence through
the episode engine, so stored trajectories are consistent with the
environment by construction (and rewards come back as ground truth).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envs import (EnvMode, SeedEnvSpec, TaskKind, TaskSpec, encode_observation,
                   generate_level, oracle_return, reset_level, step_episode,
                   task_by_name)
from .errors import (ConfigurationError, FormatVersionError, IntegrityError,
                     TrainingBudgetError)
from .policy import (PolicyModel, PPOConfig, collect_rollouts,
                     compute_advantages, evaluate_policy, make_policy,
                     ppo_update, rollout_episodes)
from .rollouts import Trajectory

DEMO_FORMAT = "demos-v1"

ORACLE_GATE_FRACTION = 0.8     # room task: fraction of scripted-player return
RANDOM_GATE_MULTIPLE = 3.0     # other tasks: multiple of the random baseline
GATE_STOP_MARGIN = 1.05        # early stop once safely above the gate
N_BASELINE_EPISODES = 200


@dataclass
class ExpertConfig:
    iterations: int = 600
    episodes_per_update: int = 64
    hidden: tuple[int, ...] = (64, 64)
    eval_every: int = 25
    eval_episodes: int = 50
    ppo: PPOConfig = field(default_factory=lambda: PPOConfig(
        lr_policy=1e-3, lr_baseline=1e-3, entropy_coef=0.03, gamma=0.97,
        explore_rate=0.05))


@dataclass
class DemonstrationSet:
    task_name: str
    seed_env: SeedEnvSpec
    trajectories: list[Trajectory]

    def __post_init__(self):
        if self.seed_env.task_name != self.task_name:
            raise ConfigurationError("seed set belongs to a different task")
        if len(self.trajectories) != self.seed_env.n:
            raise ConfigurationError(
                f"need one trajectory per seed level: have "
                f"{len(self.trajectories)}, expected {self.seed_env.n}")
        stored = sorted(t.level_seed for t in self.trajectories)
        if stored != sorted(self.seed_env.level_seeds):
            raise ConfigurationError("trajectory level seeds do not match "
                                     "the seed set")

    @property
    def n(self) -> int:
        return len(self.trajectories)

    def mean_return(self) -> float:
        return float(np.mean([t.gt_return for t in self.trajectories]))

    def equals(self, other: "DemonstrationSet") -> bool:
        if (self.task_name != other.task_name
                or self.seed_env != other.seed_env
                or self.n != other.n):
            return False
        for a, b in zip(self.trajectories, other.trajectories):
            if a.level_seed != b.level_seed:
                return False
            if not (np.array_equal(a.obs, b.obs)
                    and np.array_equal(a.actions, b.actions)
                    and np.array_equal(a.log_probs, b.log_probs)
                    and np.array_equal(a.rewards, b.rewards)):
                return False
        return True


def random_policy_return(spec: TaskSpec, episodes: int = N_BASELINE_EPISODES,
                         seed: int = 0) -> float:
    """Monte-Carlo mean return of the uniform-random policy."""
    uniform = make_policy(spec, hidden=(4,), seed=0, init_scale=0.0)
    mode = EnvMode(spec)
    mean, _ = evaluate_policy(uniform, mode, episodes, np.random.default_rng(seed))
    return mean


def oracle_mean_return(spec: TaskSpec, n_levels: int = 200,
                       seed_base: int = 0) -> float:
    return float(np.mean([oracle_return(spec, generate_level(spec, seed_base + s))
                          for s in range(n_levels)]))


def expert_gate_value(spec: TaskSpec) -> float:
    """Minimum mean ProcEnv return an expert must reach."""
    if spec.kind is TaskKind.MULTIROOM:
        return ORACLE_GATE_FRACTION * oracle_mean_return(spec)
    baseline = random_policy_return(spec)
    return max(1e-6, RANDOM_GATE_MULTIPLE * baseline)


def train_expert(spec: TaskSpec, config: ExpertConfig,
                 seed: int = 0) -> tuple[PolicyModel, float]:
    """PPO on the procedural task with ground-truth reward until the
    competence gate is safely cleared; returns (policy, final eval mean)."""
    gate = expert_gate_value(spec)
    mode = EnvMode(spec)
    rng = np.random.default_rng(seed)
    policy = make_policy(spec, hidden=config.hidden, seed=seed)
    best = -np.inf
    for it in range(1, config.iterations + 1):
        buf = collect_rollouts(policy, mode, config.episodes_per_update, rng,
                               explore=config.ppo.explore_rate)
        compute_advantages(policy, buf, config.ppo.gamma)
        ppo_update(policy, buf, config.ppo)
        if it % config.eval_every == 0 or it == config.iterations:
            mean, _ = evaluate_policy(policy, mode, config.eval_episodes,
                                      np.random.default_rng(seed + 1))
            best = max(best, mean)
            if mean >= gate * GATE_STOP_MARGIN:
                return policy, mean
    mean, _ = evaluate_policy(policy, mode, config.eval_episodes,
                              np.random.default_rng(seed + 1))
    if mean >= gate:
        return policy, mean
    raise TrainingBudgetError(
        f"expert on {spec.name} reached {mean:.3f} (best eval {best:.3f}) "
        f"but the gate is {gate:.3f} after {config.iterations} iterations")


def sample_demonstrations(expert: PolicyModel, seed_env: SeedEnvSpec,
                          rng: np.random.Generator) -> DemonstrationSet:
    """One stochastic expert trajectory per seed level, in seed order."""
    spec = expert.spec
    if seed_env.task_name != spec.name:
        raise ConfigurationError("expert and seed set task mismatch")
    states = [reset_level(spec, generate_level(spec, s))
              for s in seed_env.level_seeds]
    buffer = rollout_episodes(expert, states, rng, reward_source="ground-truth",
                              explore=0.0)
    return DemonstrationSet(task_name=spec.name, seed_env=seed_env,
                            trajectories=buffer.trajectories)


# ---------------------------------------------------------------------------
# persistence


def _float_list(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def _payload_lines(demos: DemonstrationSet) -> list[str]:
    lines = []
    for traj in demos.trajectories:
        lines.append(f"level {traj.level_seed}")
        lines.append("actions " + " ".join(str(int(a)) for a in traj.actions))
        lines.append("logps " + _float_list(traj.log_probs))
    return lines


def persist_demos(path: str | Path, demos: DemonstrationSet) -> None:
    payload = _payload_lines(demos)
    digest = hashlib.sha256("\n".join(payload).encode()).hexdigest()
    header = [DEMO_FORMAT,
              f"task {demos.task_name}",
              f"master_seed {demos.seed_env.master_seed}",
              f"n {demos.n}",
              f"checksum {digest}"]
    Path(path).write_text("\n".join(header + payload) + "\n")


def replay_trajectory(spec: TaskSpec, level_seed: int, actions: np.ndarray,
                      log_probs: np.ndarray) -> Trajectory:
    """Rebuild observations and ground-truth rewards by re-simulating."""
    state = reset_level(spec, generate_level(spec, level_seed))
    obs = np.empty((spec.horizon + 1, spec.obs_dim))
    rewards = np.empty(spec.horizon)
    obs[0] = encode_observation(spec, state)
    for t, a in enumerate(actions):
        state, obs[t + 1], rewards[t] = step_episode(spec, state, int(a))
    return Trajectory(level_seed=level_seed, obs=obs, actions=actions,
                      log_probs=log_probs, rewards=rewards,
                      gt_return=float(rewards.sum()))


def load_demos(path: str | Path) -> DemonstrationSet:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != DEMO_FORMAT:
        head = lines[0] if lines else "<empty>"
        raise FormatVersionError(f"{path}: expected {DEMO_FORMAT}, got {head}")
    try:
        task_name = lines[1].split(" ", 1)[1]
        master_seed = int(lines[2].split(" ", 1)[1])
        n = int(lines[3].split(" ", 1)[1])
        checksum = lines[4].split(" ", 1)[1]
    except (IndexError, ValueError) as exc:
        raise IntegrityError(f"{path}: malformed header") from exc
    payload = lines[5:]
    digest = hashlib.sha256("\n".join(payload).encode()).hexdigest()
    if digest != checksum:
        raise IntegrityError(f"{path}: checksum mismatch")

    spec = task_by_name(task_name)
    if len(payload) != 3 * n:
        raise IntegrityError(f"{path}: expected {3 * n} record lines, got "
                             f"{len(payload)}")
    trajectories = []
    seeds = []
    try:
        for i in range(n):
            level_line, action_line, logp_line = payload[3 * i: 3 * i + 3]
            seed = int(level_line.split(" ", 1)[1])
            actions = np.array([int(x) for x in action_line.split()[1:]],
                               dtype=np.int64)
            log_probs = np.array([float(x) for x in logp_line.split()[1:]])
            trajectories.append(replay_trajectory(spec, seed, actions, log_probs))
            seeds.append(seed)
    except (IndexError, ValueError) as exc:
        raise IntegrityError(f"{path}: malformed trajectory record") from exc
    seed_env = SeedEnvSpec(task_name=task_name, master_seed=master_seed,
                           level_seeds=tuple(seeds))
    return DemonstrationSet(task_name=task_name, seed_env=seed_env,
                            trajectories=trajectories)
