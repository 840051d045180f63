"""Clipped-surrogate policy optimization with a value baseline.

One `PolicyModel` bundles a softmax policy net and a scalar value net over
the task observation. Rollout collection steps all requested episodes in
lockstep (one batched forward per timestep), which is both fast and exactly
reproducible for a fixed generator.

Exploration follows the mixture reading of an exploration rate ε: behavior
probabilities are (1-ε)·π + ε/|A| during training collection and inside the
surrogate, so the first update epoch sees ratios of exactly 1. Evaluation
always uses the pure policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, backprop_gradients
from .envs import EnvMode, TaskSpec, encode_observation, reset_episode, step_episode
from .errors import ConfigurationError, NumericError
from .networks import (NetworkSpec, init_mlp_params, mlp_forward_np,
                       mlp_log_probs, mlp_preactivation, mlp_preactivation_np)
from .optim import AdamState, adam_step
from .rollouts import RolloutBuffer, Trajectory

REWARD_SOURCES = ("ground-truth", "learned", "none")


@dataclass
class PPOConfig:
    lr_policy: float = 3e-4
    lr_baseline: float = 5e-4
    entropy_coef: float = 0.1
    gamma: float = 0.9
    clip_ratio: float = 0.2
    epochs: int = 3
    explore_rate: float = 0.0
    policy_steps_per_reward_step: int = 3  # K

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError("gamma must lie in (0, 1]")
        if not 0.0 < self.clip_ratio < 1.0:
            raise ConfigurationError("clip ratio must lie in (0, 1)")
        if self.policy_steps_per_reward_step < 1:
            raise ConfigurationError("K must be at least 1")
        if not 0.0 <= self.explore_rate < 1.0:
            raise ConfigurationError("exploration rate must lie in [0, 1)")


@dataclass
class PolicyModel:
    spec: TaskSpec
    policy_net: NetworkSpec
    policy_params: dict[str, Tensor]
    value_net: NetworkSpec
    value_params: dict[str, Tensor]
    policy_opt: AdamState | None = None
    value_opt: AdamState | None = None

    def action_probs(self, obs: np.ndarray, explore: float = 0.0) -> np.ndarray:
        """Behavior distribution for a batch of observations."""
        logits = mlp_preactivation_np(self.policy_net, self.policy_params, obs)
        probs = ad.np_softmax(logits, axis=-1)
        if explore > 0.0:
            probs = (1.0 - explore) * probs + explore / probs.shape[1]
        return probs

    def values(self, obs: np.ndarray) -> np.ndarray:
        return mlp_forward_np(self.value_net, self.value_params, obs)[:, 0]


def make_policy(spec: TaskSpec, hidden: tuple[int, ...], seed: int,
                init_scale: float = 1.0) -> PolicyModel:
    rng = np.random.default_rng(seed)
    policy_net = NetworkSpec(in_dim=spec.obs_dim, hidden=hidden,
                             out_dim=spec.n_actions, output="softmax")
    value_net = NetworkSpec(in_dim=spec.obs_dim, hidden=hidden, out_dim=1)
    return PolicyModel(spec=spec, policy_net=policy_net,
                       policy_params=init_mlp_params(policy_net, rng, init_scale),
                       value_net=value_net,
                       value_params=init_mlp_params(value_net, rng, init_scale))


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row."""
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    draws = rng.random(probs.shape[0])
    return (draws[:, None] > cum).sum(axis=1).astype(np.int64)


def rollout_episodes(policy: PolicyModel, states: list,
                     rng: np.random.Generator,
                     reward_source: str = "ground-truth",
                     explore: float = 0.0,
                     reward_fn: Callable[[Trajectory], np.ndarray] | None = None,
                     ) -> RolloutBuffer:
    """Drive the given freshly reset episode states to the horizon in
    lockstep (one batched policy forward per timestep).

    reward_source fills each trajectory's reward slot: the task reward,
    zeros ("none"), or `reward_fn(trajectory)` for a learned signal. The
    undiscounted task return is tracked on every trajectory either way.
    """
    if reward_source not in REWARD_SOURCES:
        raise ConfigurationError(f"unknown reward source {reward_source!r}")
    if reward_source == "learned" and reward_fn is None:
        raise ConfigurationError("learned reward source needs a reward_fn")

    spec = policy.spec
    horizon = spec.horizon
    episodes = len(states)
    obs = np.empty((episodes, horizon + 1, spec.obs_dim))
    actions = np.empty((episodes, horizon), dtype=np.int64)
    log_probs = np.empty((episodes, horizon))
    gt_rewards = np.zeros((episodes, horizon))
    for e, s in enumerate(states):
        obs[e, 0] = encode_observation(spec, s)

    for t in range(horizon):
        probs = policy.action_probs(obs[:, t], explore=explore)
        acts = _sample_rows(probs, rng)
        actions[:, t] = acts
        log_probs[:, t] = np.log(probs[np.arange(episodes), acts])
        for e in range(episodes):
            states[e], obs[e, t + 1], r = step_episode(spec, states[e],
                                                       int(acts[e]))
            gt_rewards[e, t] = r

    buffer = RolloutBuffer()
    for e in range(episodes):
        if reward_source == "ground-truth":
            rewards = gt_rewards[e]
        else:
            rewards = np.zeros(horizon)
        traj = Trajectory(level_seed=states[e].level.seed, obs=obs[e],
                          actions=actions[e], log_probs=log_probs[e],
                          rewards=rewards, gt_return=float(gt_rewards[e].sum()))
        if reward_source == "learned":
            traj.rewards = np.asarray(reward_fn(traj), dtype=np.float64)
        buffer.append(traj)
    return buffer


def collect_rollouts(policy: PolicyModel, mode: EnvMode, episodes: int,
                     rng: np.random.Generator,
                     reward_source: str = "ground-truth",
                     explore: float = 0.0,
                     reward_fn: Callable[[Trajectory], np.ndarray] | None = None,
                     ) -> RolloutBuffer:
    """Play `episodes` fixed-horizon episodes drawn from `mode`."""
    if episodes < 1:
        raise ConfigurationError("need at least one episode")
    states = [reset_episode(mode, rng) for _ in range(episodes)]
    return rollout_episodes(policy, states, rng, reward_source=reward_source,
                            explore=explore, reward_fn=reward_fn)


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    out = np.empty_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def compute_advantages(policy: PolicyModel, buffer: RolloutBuffer,
                       gamma: float) -> None:
    """Discounted returns, baseline values, and batch-normalized advantages."""
    for traj in buffer.trajectories:
        traj.returns = discounted_returns(traj.rewards, gamma)
        traj.values = policy.values(traj.obs[:-1])
        traj.advantages = traj.returns - traj.values
    flat = buffer.flat_advantages()
    mean = flat.mean()
    std = flat.std()
    scale = std if std > 1e-8 else 1.0
    for traj in buffer.trajectories:
        traj.advantages = (traj.advantages - mean) / scale


@dataclass
class PPOStats:
    policy_loss: float
    value_loss: float
    entropy: float
    approx_kl: float


def _behavior_log_probs(policy: PolicyModel, obs: Tensor, actions: np.ndarray,
                        explore: float) -> tuple[Tensor, Tensor, Tensor]:
    """(behavior log-prob of taken actions, pure log-softmax, pure probs)."""
    logits = mlp_preactivation(policy.policy_net, policy.policy_params, obs)
    log_p = ad.log_softmax(logits)
    probs = ad.softmax(logits)
    if explore > 0.0:
        mixed = probs * (1.0 - explore) + explore / policy.spec.n_actions
        taken = ad.log(ad.take_per_row(mixed, actions))
    else:
        taken = ad.take_per_row(log_p, actions)
    return taken, log_p, probs


def ppo_update(policy: PolicyModel, buffer: RolloutBuffer, config: PPOConfig,
               ) -> PPOStats:
    """Clipped-surrogate update over the full batch for `config.epochs`."""
    obs = Tensor(buffer.flat_obs())
    actions = buffer.flat_actions()
    old_logp = buffer.flat_log_probs()
    advantages = buffer.flat_advantages()
    returns = buffer.flat_returns()
    n = len(actions)

    if policy.policy_opt is None:
        policy.policy_opt = AdamState(lr=config.lr_policy)
        policy.value_opt = AdamState(lr=config.lr_baseline)

    stats = PPOStats(0.0, 0.0, 0.0, 0.0)
    adv_t = Tensor(advantages)
    for _ in range(config.epochs):
        taken, log_p, probs = _behavior_log_probs(policy, obs, actions,
                                                  config.explore_rate)
        # exponent clamp keeps far-off-policy ratios from overflowing
        ratio = ad.exp(ad.clip(taken - Tensor(old_logp), -60.0, 60.0))
        clipped = ad.clip(ratio, 1.0 - config.clip_ratio, 1.0 + config.clip_ratio)
        surrogate = ad.reduce_mean(ad.minimum(ratio * adv_t, clipped * adv_t))
        entropy = ad.reduce_sum(probs * log_p) * (-1.0 / n)
        loss = -(surrogate + entropy * config.entropy_coef)
        if not np.isfinite(loss.item()):
            raise NumericError("policy loss diverged to a non-finite value")
        grads = backprop_gradients(policy.policy_params, loss)
        adam_step(policy.policy_opt, policy.policy_params, grads)

        values = mlp_preactivation(policy.value_net, policy.value_params, obs)
        verr = ad.reshape(values, (n,)) - Tensor(returns)
        value_loss = ad.reduce_mean(ad.square(verr))
        vgrads = backprop_gradients(policy.value_params, value_loss)
        adam_step(policy.value_opt, policy.value_params, vgrads)

        stats.policy_loss = float(loss.item())
        stats.value_loss = float(value_loss.item())
        stats.entropy = float(entropy.item())

    with np.errstate(divide="ignore"):
        new_probs = policy.action_probs(buffer.flat_obs(),
                                        explore=config.explore_rate)
        new_logp = np.log(new_probs[np.arange(n), actions])
    stats.approx_kl = float(np.mean(old_logp - new_logp))
    return stats


def evaluate_policy(policy: PolicyModel, mode: EnvMode, episodes: int,
                    rng: np.random.Generator) -> tuple[float, float]:
    """Mean and standard deviation of ground-truth return, pure policy."""
    buffer = collect_rollouts(policy, mode, episodes, rng,
                              reward_source="ground-truth", explore=0.0)
    rets = np.array([t.total_return for t in buffer.trajectories])
    return float(rets.mean()), float(rets.std())
