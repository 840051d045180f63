"""Adversarial reward learning with a state-only reward and potential shaping.

The discriminator scores a transition with

    f(s, s') = r(s) + gamma * phi(s') - phi(s)

and classifies against the generator's density: D = exp(f) / (exp(f) + pi).
Everything runs in log space: -log D = softplus(log pi - f) and
-log(1 - D) = softplus(f - log pi), so saturated discriminators never
produce infinities. The generator's reward is the discriminator logit
r_hat = f - log pi, standardized to zero mean and a small target deviation.

Three stabilizers shape the training loop: per-batch reward
standardization, dataset expansion (several policy updates per
discriminator step plus trajectory replay), and reward-model checkpointing
with selection by the generator's concurrent ground-truth score (the
final discriminator is often overfit; an earlier snapshot transfers better).

Both observations fed to the reward and shaping nets are the reward-visible
observation prefix, never the policy-only extras.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, backprop_gradients
from .demos import DemonstrationSet
from .envs import EnvMode, TaskSpec
from .errors import ConfigurationError, UsageError
from .networks import NetworkSpec, init_mlp_params, mlp_preactivation, mlp_preactivation_np
from .optim import AdamState, adam_step
from .policy import (PolicyModel, PPOConfig, collect_rollouts,
                     compute_advantages, evaluate_policy, make_policy,
                     ppo_update)
from .rollouts import RolloutBuffer, Trajectory

REWARD_STD_TARGET = 0.05
PROB_FLOOR = 1e-12


@dataclass
class DiscriminatorModel:
    """Reward net r(s), shaping net phi(s) (same architecture), discount.

    With `pool` set to (cells, channels), the leading cells*channels input
    dims are summed per channel before the nets see them: the reward becomes
    a function of how many tiles of each kind are visible, not where they
    sit. That is the smallest translation-invariant architecture (a 1x1
    convolution with global sum pooling) and is what lets a reward learned
    on a handful of fixed layouts transfer to fresh ones.
    """

    net: NetworkSpec
    reward_params: dict[str, Tensor]
    shaping_params: dict[str, Tensor]
    gamma: float
    use_shaping: bool = True
    obs_dim: int = 0
    pool: tuple[int, int] | None = None

    def clone_params(self) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
        return ({k: v.data.copy() for k, v in self.reward_params.items()},
                {k: v.data.copy() for k, v in self.shaping_params.items()})


def pool_shape(spec: TaskSpec) -> tuple[int, int]:
    """(cells, channels) of the grid one-hot block, agent channel included."""
    return spec.size * spec.size, len(spec.channels) + 1


def pooled_dim(spec: TaskSpec) -> int:
    cells, ch = pool_shape(spec)
    return ch + (spec.reward_obs_dim - cells * ch)


def pool_features(pool: tuple[int, int] | None,
                  states: np.ndarray) -> np.ndarray:
    """Sum the grid block per channel; pass any trailing dims through."""
    if pool is None:
        return states
    cells, ch = pool
    head = states[:, : cells * ch].reshape(len(states), cells, ch).sum(axis=1)
    return np.concatenate([head, states[:, cells * ch:]], axis=1)


def make_discriminator(spec: TaskSpec, hidden: tuple[int, ...], gamma: float,
                       seed: int, use_shaping: bool = True,
                       init_scale: float = 1.0,
                       pooled: bool = False) -> DiscriminatorModel:
    rng = np.random.default_rng(seed)
    in_dim = pooled_dim(spec) if pooled else spec.reward_obs_dim
    net = NetworkSpec(in_dim=in_dim, hidden=hidden, out_dim=1)
    return DiscriminatorModel(net=net,
                              reward_params=init_mlp_params(net, rng, init_scale),
                              shaping_params=init_mlp_params(net, rng, init_scale),
                              gamma=gamma, use_shaping=use_shaping,
                              obs_dim=spec.reward_obs_dim,
                              pool=pool_shape(spec) if pooled else None)


def _reward_prefix(model: DiscriminatorModel, obs: np.ndarray) -> np.ndarray:
    return pool_features(model.pool, np.asarray(obs)[:, : model.obs_dim])


def f_value(model: DiscriminatorModel, obs: np.ndarray,
            next_obs: np.ndarray) -> np.ndarray:
    """f = r(s) + gamma*phi(s') - phi(s) for batches of observations."""
    s = _reward_prefix(model, obs)
    r = mlp_preactivation_np(model.net, model.reward_params, s)[:, 0]
    if not model.use_shaping:
        return r
    sp = _reward_prefix(model, next_obs)
    phi_s = mlp_preactivation_np(model.net, model.shaping_params, s)[:, 0]
    phi_sp = mlp_preactivation_np(model.net, model.shaping_params, sp)[:, 0]
    return r + model.gamma * phi_sp - phi_s


def _f_value_tensor(model: DiscriminatorModel, obs: np.ndarray,
                    next_obs: np.ndarray) -> Tensor:
    s = Tensor(_reward_prefix(model, obs))
    n = s.shape[0]
    r = ad.reshape(mlp_preactivation(model.net, model.reward_params, s), (n,))
    if not model.use_shaping:
        return r
    sp = Tensor(_reward_prefix(model, next_obs))
    phi_s = ad.reshape(mlp_preactivation(model.net, model.shaping_params, s), (n,))
    phi_sp = ad.reshape(mlp_preactivation(model.net, model.shaping_params, sp), (n,))
    return r + phi_sp * model.gamma - phi_s


def discriminator_prob(f: np.ndarray, log_pi: np.ndarray) -> np.ndarray:
    """D = exp(f) / (exp(f) + pi), clamped away from exact 0 and 1."""
    d = ad._np_sigmoid(np.asarray(f, dtype=np.float64)
                       - np.asarray(log_pi, dtype=np.float64))
    return np.clip(d, PROB_FLOOR, 1.0 - PROB_FLOOR)


def learned_reward(f: np.ndarray, log_pi: np.ndarray) -> np.ndarray:
    """Discriminator logit log D - log(1-D), which is exactly f - log pi."""
    return np.asarray(f, dtype=np.float64) - np.asarray(log_pi, dtype=np.float64)


@dataclass
class RewardStandardizer:
    """Maps reward batches to zero mean and a fixed small deviation."""

    target_std: float = REWARD_STD_TARGET
    last_mean: float = 0.0
    last_std: float = 0.0

    def standardize(self, rewards: np.ndarray) -> np.ndarray:
        rewards = np.asarray(rewards, dtype=np.float64)
        if rewards.size == 0:
            raise UsageError("cannot standardize an empty reward batch")
        mean = float(rewards.mean())
        std = float(rewards.std())
        self.last_mean, self.last_std = mean, std
        if std <= 1e-12:
            return np.zeros_like(rewards)
        return (rewards - mean) * (self.target_std / std)


@dataclass
class ReplayBuffer:
    """Oldest-first ring of generator trajectories from past iterations."""

    capacity: int
    items: list[Trajectory] = field(default_factory=list)

    def push(self, trajectories: list[Trajectory]) -> None:
        self.items.extend(trajectories)
        if len(self.items) > self.capacity:
            del self.items[: len(self.items) - self.capacity]

    def sample(self, k: int, rng: np.random.Generator) -> list[Trajectory]:
        if not self.items or k <= 0:
            return []
        idx = rng.integers(0, len(self.items), size=min(k, len(self.items)))
        return [self.items[int(i)] for i in idx]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class RewardCheckpoint:
    iteration: int
    reward_params: dict[str, np.ndarray]
    shaping_params: dict[str, np.ndarray]
    eval_score: float


@dataclass
class CheckpointStore:
    """Append-only list of reward snapshots with generator eval scores."""

    net: NetworkSpec
    gamma: float
    use_shaping: bool
    obs_dim: int
    pool: tuple[int, int] | None = None
    snapshots: list[RewardCheckpoint] = field(default_factory=list)

    def add(self, iteration: int, model: DiscriminatorModel,
            eval_score: float) -> None:
        reward, shaping = model.clone_params()
        self.snapshots.append(RewardCheckpoint(
            iteration=iteration, reward_params=reward, shaping_params=shaping,
            eval_score=eval_score))

    def rebuild(self, snap: RewardCheckpoint) -> DiscriminatorModel:
        return DiscriminatorModel(
            net=self.net,
            reward_params={k: Tensor(v.copy(), requires_grad=True)
                           for k, v in snap.reward_params.items()},
            shaping_params={k: Tensor(v.copy(), requires_grad=True)
                            for k, v in snap.shaping_params.items()},
            gamma=self.gamma, use_shaping=self.use_shaping,
            obs_dim=self.obs_dim, pool=self.pool)


def select_reward_checkpoint(store: CheckpointStore) -> DiscriminatorModel:
    """Snapshot whose concurrent generator scored highest; earliest on ties."""
    if not store.snapshots:
        raise UsageError("no reward checkpoints stored")
    best = store.snapshots[0]
    for snap in store.snapshots[1:]:
        if snap.eval_score > best.eval_score:
            best = snap
    return store.rebuild(best)


def _policy_log_probs(policy: PolicyModel, obs: np.ndarray, actions: np.ndarray,
                      explore: float) -> np.ndarray:
    """log pi(a|s) of the current behavior policy, detached from the tape."""
    probs = policy.action_probs(obs, explore=explore)
    return np.log(probs[np.arange(len(actions)), actions])


def discriminator_loss(model: DiscriminatorModel, expert: RolloutBuffer,
                       policy_batch: RolloutBuffer, policy: PolicyModel,
                       explore: float = 0.0) -> Tensor:
    """Cross-entropy of D on expert (label 1) vs generator (label 0)
    transitions, each side averaged per transition. Gradients reach only the
    reward and shaping parameters; log pi enters as a constant."""
    if len(expert) == 0 or len(policy_batch) == 0:
        raise UsageError("discriminator batches must be nonempty")
    e_obs, e_next = expert.flat_obs(), expert.flat_next_obs()
    p_obs, p_next = policy_batch.flat_obs(), policy_batch.flat_next_obs()
    e_logpi = _policy_log_probs(policy, e_obs, expert.flat_actions(), explore)
    p_logpi = _policy_log_probs(policy, p_obs, policy_batch.flat_actions(),
                                explore)
    f_e = _f_value_tensor(model, e_obs, e_next)
    f_p = _f_value_tensor(model, p_obs, p_next)
    loss_e = ad.reduce_mean(ad.softplus(Tensor(e_logpi) - f_e))
    loss_p = ad.reduce_mean(ad.softplus(f_p - Tensor(p_logpi)))
    return loss_e + loss_p


@dataclass
class AIRLConfig:
    iterations: int = 300
    episodes_per_update: int = 16
    checkpoint_every: int = 10          # J
    replay_capacity: int = 50           # C
    fresh_fraction: float = 0.5         # discriminator batch mix
    lr_reward: float = 1e-3
    reward_std: float = REWARD_STD_TARGET
    weight_decay: float = 0.0   # per-step shrink factor on weight matrices
    eval_episodes: int = 20
    hidden: tuple[int, ...] = (64, 64)
    disc_hidden: tuple[int, ...] | None = None   # None: same as hidden
    disc_pool: bool = False     # channel-count pooling of disc inputs
    use_shaping: bool = True
    ppo: PPOConfig = field(default_factory=lambda: PPOConfig(
        lr_policy=1e-3, lr_baseline=1e-3, entropy_coef=0.03, gamma=0.97,
        explore_rate=0.05))

    def __post_init__(self):
        if self.iterations < 1 or self.episodes_per_update < 1:
            raise ConfigurationError("iteration and episode counts must be "
                                     "positive")
        if not 0.0 <= self.fresh_fraction <= 1.0:
            raise ConfigurationError("fresh fraction must lie in [0, 1]")


@dataclass
class AIRLResult:
    store: CheckpointStore
    generator: PolicyModel
    metrics: list[dict]
    timings_ms: list[float]


def _learned_reward_fn(model: DiscriminatorModel):
    def fn(traj: Trajectory) -> np.ndarray:
        f = f_value(model, traj.obs[:-1], traj.obs[1:])
        return learned_reward(f, traj.log_probs)
    return fn


def _standardize_buffer(buffer: RolloutBuffer,
                        standardizer: RewardStandardizer) -> None:
    flat = buffer.flat_rewards()
    out = standardizer.standardize(flat)
    ofs = 0
    for traj in buffer.trajectories:
        traj.rewards = out[ofs: ofs + traj.horizon]
        ofs += traj.horizon


def airl_train(spec: TaskSpec, mode: EnvMode, demos: DemonstrationSet,
               config: AIRLConfig, seed: int = 0) -> AIRLResult:
    """Alternate one discriminator gradient pass with K policy updates.

    `mode` is where the generator lives: the demo seed set for reward
    learning confined to seed levels, or the procedural stream for the
    naive arm. Demo trajectories must come from the seed-set levels when a
    seed set is used.
    """
    if demos.task_name != spec.name:
        raise ConfigurationError("demonstrations are for a different task")
    if (mode.seed_env is not None
            and sorted(demos.seed_env.level_seeds)
            != sorted(mode.seed_env.level_seeds)):
        raise ConfigurationError("demo levels do not match the seed set")

    rng = np.random.default_rng(seed)
    policy = make_policy(spec, hidden=config.hidden, seed=seed)
    model = make_discriminator(spec,
                               config.disc_hidden or config.hidden,
                               config.ppo.gamma, seed=seed + 1,
                               use_shaping=config.use_shaping,
                               pooled=config.disc_pool)
    disc_opt = AdamState(lr=config.lr_reward)
    replay = ReplayBuffer(capacity=config.replay_capacity)
    standardizer = RewardStandardizer(target_std=config.reward_std)
    expert_buffer = RolloutBuffer(trajectories=list(demos.trajectories))
    store = CheckpointStore(net=model.net, gamma=model.gamma,
                            use_shaping=model.use_shaping,
                            obs_dim=model.obs_dim, pool=model.pool)
    metrics: list[dict] = []
    timings: list[float] = []
    explore = config.ppo.explore_rate
    k_steps = config.ppo.policy_steps_per_reward_step

    for it in range(config.iterations):
        t0 = time.perf_counter()

        fresh = collect_rollouts(policy, mode, config.episodes_per_update,
                                 rng, reward_source="none", explore=explore)

        # one discriminator pass: expert vs fresh/replay mixture
        n_pol = len(expert_buffer)
        n_fresh = min(int(round(n_pol * config.fresh_fraction)), len(fresh))
        replay_part = replay.sample(n_pol - n_fresh, rng)
        if len(replay_part) < n_pol - n_fresh:
            n_fresh = min(n_pol - len(replay_part), len(fresh))
        fresh_idx = rng.choice(len(fresh), size=n_fresh, replace=False)
        policy_batch = RolloutBuffer(
            trajectories=[fresh.trajectories[int(i)] for i in fresh_idx]
            + replay_part)
        loss = discriminator_loss(model, expert_buffer, policy_batch, policy,
                                  explore=explore)
        params = {f"r.{k}": v for k, v in model.reward_params.items()}
        if model.use_shaping:
            params.update({f"p.{k}": v for k, v in model.shaping_params.items()})
        grads = backprop_gradients(params, loss)
        adam_step(disc_opt, params, grads)
        if config.weight_decay > 0.0:
            for name, p in params.items():
                if ".w" in name:
                    p.data *= 1.0 - config.weight_decay
        disc_loss = float(loss.item())
        replay.push(fresh.trajectories)

        # K policy phases on the (just updated) frozen reward
        reward_fn = _learned_reward_fn(model)
        mean_learned = 0.0
        gt_returns = []
        for k in range(k_steps):
            if k == 0:
                batch = fresh
                for traj in batch.trajectories:
                    traj.rewards = reward_fn(traj)
            else:
                batch = collect_rollouts(policy, mode,
                                         config.episodes_per_update, rng,
                                         reward_source="learned",
                                         explore=explore, reward_fn=reward_fn)
            mean_learned += float(batch.flat_rewards().mean()) / k_steps
            gt_returns.extend(t.gt_return for t in batch.trajectories)
            _standardize_buffer(batch, standardizer)
            compute_advantages(policy, batch, config.ppo.gamma)
            ppo_update(policy, batch, config.ppo)

        train_eval = float(np.mean(gt_returns))
        if (it + 1) % config.checkpoint_every == 0 or it == config.iterations - 1:
            mean_eval, _ = evaluate_policy(policy, mode, config.eval_episodes,
                                           np.random.default_rng(seed + 7))
            store.add(it, model, mean_eval)
        metrics.append({"iteration": it, "disc_loss": disc_loss,
                        "mean_learned_reward": mean_learned,
                        "env_eval": train_eval})
        timings.append((time.perf_counter() - t0) * 1e3)

    return AIRLResult(store=store, generator=policy, metrics=metrics,
                      timings_ms=timings)


def reward_head(model: DiscriminatorModel, obs: np.ndarray) -> np.ndarray:
    """The state-only reward r(s), the part of f that transfers across
    levels; the shaping potential stays behind with the training levels."""
    s = _reward_prefix(model, obs)
    return mlp_preactivation_np(model.net, model.reward_params, s)[:, 0]


def retrain_on_procenv(model: DiscriminatorModel, spec: TaskSpec,
                       config: AIRLConfig, seed: int = 0,
                       iterations: int | None = None,
                       eval_episodes: int = 100,
                       ) -> tuple[PolicyModel, tuple[float, float], list[dict]]:
    """Train a fresh agent on the procedural task with the frozen shaped
    reward r(s) + gamma*phi(s') - phi(s); the entropy bonus supplies the
    policy-entropy term. Shaping with the agent's own discount leaves the
    optimal policy identical to the one under r(s) alone."""
    rng = np.random.default_rng(seed)
    policy = make_policy(spec, hidden=config.hidden, seed=seed)
    mode = EnvMode(spec)
    standardizer = RewardStandardizer(target_std=config.reward_std)
    iterations = config.iterations if iterations is None else iterations

    def reward_fn(traj: Trajectory) -> np.ndarray:
        return f_value(model, traj.obs[:-1], traj.obs[1:])

    metrics: list[dict] = []
    for it in range(iterations):
        batch = collect_rollouts(policy, mode, config.episodes_per_update,
                                 rng, reward_source="learned",
                                 explore=config.ppo.explore_rate,
                                 reward_fn=reward_fn)
        gt = float(np.mean([t.gt_return for t in batch.trajectories]))
        _standardize_buffer(batch, standardizer)
        compute_advantages(policy, batch, config.ppo.gamma)
        ppo_update(policy, batch, config.ppo)
        metrics.append({"iteration": it, "env_eval": gt})

    final = evaluate_policy(policy, mode, eval_episodes,
                            np.random.default_rng(seed + 11))
    return policy, final, metrics
