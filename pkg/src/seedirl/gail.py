"""State-only adversarial imitation baseline.

A plain classifier over reward-visible observations is trained to separate
expert states from generator states; the policy is rewarded with
-log(1 - D(s)) (standardized) and trained on the seed levels only. There is
no reusable reward: at evaluation time the trained policy itself is dropped
onto the procedural distribution unchanged.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, backprop_gradients
from .demos import DemonstrationSet
from .envs import EnvMode, TaskSpec
from .errors import ConfigurationError, UsageError
from .networks import NetworkSpec, init_mlp_params, mlp_preactivation, mlp_preactivation_np
from .optim import AdamState, adam_step
from .policy import (PolicyModel, collect_rollouts, compute_advantages,
                     evaluate_policy, make_policy, ppo_update)
from .rollouts import RolloutBuffer, Trajectory
from .airl import (AIRLConfig, PROB_FLOOR, ReplayBuffer, RewardStandardizer,
                   _standardize_buffer, pool_features, pool_shape, pooled_dim)


@dataclass
class GailDiscriminator:
    net: NetworkSpec
    params: dict[str, Tensor]
    obs_dim: int
    pool: tuple[int, int] | None = None

    def inputs(self, obs: np.ndarray) -> np.ndarray:
        return pool_features(self.pool, np.asarray(obs)[:, : self.obs_dim])

    def logits(self, obs: np.ndarray) -> np.ndarray:
        return mlp_preactivation_np(self.net, self.params, self.inputs(obs))[:, 0]

    def prob(self, obs: np.ndarray) -> np.ndarray:
        return np.clip(ad._np_sigmoid(self.logits(obs)),
                       PROB_FLOOR, 1.0 - PROB_FLOOR)


def make_gail_discriminator(spec: TaskSpec, hidden: tuple[int, ...],
                            seed: int, pooled: bool = False) -> GailDiscriminator:
    in_dim = pooled_dim(spec) if pooled else spec.reward_obs_dim
    net = NetworkSpec(in_dim=in_dim, hidden=hidden, out_dim=1)
    params = init_mlp_params(net, np.random.default_rng(seed))
    return GailDiscriminator(net=net, params=params,
                             obs_dim=spec.reward_obs_dim,
                             pool=pool_shape(spec) if pooled else None)


def gail_loss(disc: GailDiscriminator, expert: RolloutBuffer,
              policy_batch: RolloutBuffer) -> Tensor:
    """Binary cross-entropy on states, each side averaged per transition."""
    if len(expert) == 0 or len(policy_batch) == 0:
        raise UsageError("discriminator batches must be nonempty")
    e = Tensor(disc.inputs(expert.flat_obs()))
    p = Tensor(disc.inputs(policy_batch.flat_obs()))
    ne, np_ = e.shape[0], p.shape[0]
    z_e = ad.reshape(mlp_preactivation(disc.net, disc.params, e), (ne,))
    z_p = ad.reshape(mlp_preactivation(disc.net, disc.params, p), (np_,))
    # -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    return ad.reduce_mean(ad.softplus(-z_e)) + ad.reduce_mean(ad.softplus(z_p))


def gail_update(disc: GailDiscriminator, opt: AdamState,
                expert: RolloutBuffer, policy_batch: RolloutBuffer) -> float:
    loss = gail_loss(disc, expert, policy_batch)
    grads = backprop_gradients(disc.params, loss)
    adam_step(opt, disc.params, grads)
    return float(loss.item())


def gail_policy_reward(disc: GailDiscriminator, obs: np.ndarray) -> np.ndarray:
    """-log(1 - D(s)) = softplus(logit), pre-standardization."""
    z = disc.logits(obs)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass
class GailResult:
    policy: PolicyModel
    disc: GailDiscriminator
    metrics: list[dict]
    timings_ms: list[float]


def gail_train(spec: TaskSpec, mode: EnvMode, demos: DemonstrationSet,
               config: AIRLConfig, seed: int = 0) -> GailResult:
    """Same alternation schedule as the reward learner, policy on the seed
    levels only."""
    if demos.task_name != spec.name:
        raise ConfigurationError("demonstrations are for a different task")
    rng = np.random.default_rng(seed)
    policy = make_policy(spec, hidden=config.hidden, seed=seed)
    disc = make_gail_discriminator(spec, config.disc_hidden or config.hidden,
                                   seed=seed + 1, pooled=config.disc_pool)
    opt = AdamState(lr=config.lr_reward)
    replay = ReplayBuffer(capacity=config.replay_capacity)
    standardizer = RewardStandardizer(target_std=config.reward_std)
    expert_buffer = RolloutBuffer(trajectories=list(demos.trajectories))
    explore = config.ppo.explore_rate
    metrics: list[dict] = []
    timings: list[float] = []

    def reward_fn(traj: Trajectory) -> np.ndarray:
        return gail_policy_reward(disc, traj.obs[:-1])

    for it in range(config.iterations):
        t0 = time.perf_counter()
        fresh = collect_rollouts(policy, mode, config.episodes_per_update,
                                 rng, reward_source="none", explore=explore)
        n_pol = len(expert_buffer)
        n_fresh = min(int(round(n_pol * config.fresh_fraction)), len(fresh))
        replay_part = replay.sample(n_pol - n_fresh, rng)
        if len(replay_part) < n_pol - n_fresh:
            n_fresh = min(n_pol - len(replay_part), len(fresh))
        fresh_idx = rng.choice(len(fresh), size=n_fresh, replace=False)
        policy_batch = RolloutBuffer(
            trajectories=[fresh.trajectories[int(i)] for i in fresh_idx]
            + replay_part)
        disc_loss = gail_update(disc, opt, expert_buffer, policy_batch)
        replay.push(fresh.trajectories)

        gt_returns = []
        mean_learned = 0.0
        k_steps = config.ppo.policy_steps_per_reward_step
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

        metrics.append({"iteration": it, "disc_loss": disc_loss,
                        "mean_learned_reward": mean_learned,
                        "env_eval": float(np.mean(gt_returns))})
        timings.append((time.perf_counter() - t0) * 1e3)
    return GailResult(policy=policy, disc=disc, metrics=metrics,
                      timings_ms=timings)


def gail_transfer_eval(result: GailResult, spec: TaskSpec,
                       episodes: int = 100, seed: int = 0) -> tuple[float, float]:
    """Drop the seed-level policy onto the procedural task, no updates."""
    return evaluate_policy(result.policy, EnvMode(spec), episodes,
                           np.random.default_rng(seed))
