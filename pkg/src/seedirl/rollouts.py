"""Trajectory containers for fixed-horizon rollouts.

Every trajectory holds exactly T transitions as dense arrays: observations
(T+1 rows, so next-observations are the shifted view), actions, behavior
log-probabilities recorded at sampling time, rewards, and optional value /
return / advantage annotations filled in by the learner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError


@dataclass
class Trajectory:
    level_seed: int
    obs: np.ndarray            # (T+1, obs_dim) float64
    actions: np.ndarray        # (T,) int64
    log_probs: np.ndarray      # (T,) behavior log-probabilities
    rewards: np.ndarray        # (T,) from the selected reward source
    gt_return: float = 0.0     # undiscounted task return, always tracked
    values: np.ndarray | None = None
    returns: np.ndarray | None = None
    advantages: np.ndarray | None = None

    def __post_init__(self):
        t = len(self.actions)
        if self.obs.shape[0] != t + 1:
            raise UsageError("observation rows must be one more than actions")
        if not (len(self.log_probs) == len(self.rewards) == t):
            raise UsageError("per-step arrays disagree on length")
        if not np.all(np.isfinite(self.log_probs)) or np.any(self.log_probs > 0):
            raise UsageError("log-probabilities must be finite and nonpositive")

    @property
    def horizon(self) -> int:
        return len(self.actions)

    @property
    def total_return(self) -> float:
        return float(self.rewards.sum())


@dataclass
class RolloutBuffer:
    trajectories: list[Trajectory] = field(default_factory=list)

    def append(self, traj: Trajectory) -> None:
        if self.trajectories and traj.horizon != self.trajectories[0].horizon:
            raise UsageError("mixed horizons in one buffer")
        self.trajectories.append(traj)

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def n_transitions(self) -> int:
        return sum(t.horizon for t in self.trajectories)

    def flat_obs(self) -> np.ndarray:
        return np.concatenate([t.obs[:-1] for t in self.trajectories])

    def flat_next_obs(self) -> np.ndarray:
        return np.concatenate([t.obs[1:] for t in self.trajectories])

    def flat_actions(self) -> np.ndarray:
        return np.concatenate([t.actions for t in self.trajectories])

    def flat_log_probs(self) -> np.ndarray:
        return np.concatenate([t.log_probs for t in self.trajectories])

    def flat_rewards(self) -> np.ndarray:
        return np.concatenate([t.rewards for t in self.trajectories])

    def flat_returns(self) -> np.ndarray:
        return np.concatenate([t.returns for t in self.trajectories])

    def flat_advantages(self) -> np.ndarray:
        return np.concatenate([t.advantages for t in self.trajectories])

    def mean_return(self) -> float:
        return float(np.mean([t.total_return for t in self.trajectories]))
