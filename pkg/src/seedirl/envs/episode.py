"""Fixed-horizon episode engine shared by all four tasks.

Every episode runs exactly `spec.horizon` transitions. When a task's
terminal condition fires (all red potions collected; enemy defeated), the
state latches: the remaining steps replay the terminal observation and
reward unchanged. The room and maze tasks have no terminal condition, so
their episodes end only at the horizon.

`step_episode` never mutates its input state; grids are a few hundred bytes
so the per-step copy is cheap and keeps transitions value-semantic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from .levels import Level, chebyshev, legal_ranged_cell
from .tasks import (ACTION_FORWARD, ACTION_LEFT, ACTION_MELEE, ACTION_OPEN,
                    ACTION_RANGED, ACTION_RIGHT, ATTR_HI, ATTR_LO, COMPASS,
                    DOOR_CLOSED, DOOR_OPEN, EMPTY, ENEMY_MAX_HP,
                    FACING_VECTORS, GOAL, ITEM, RED, WALL, TaskKind, TaskSpec,
                    channel_array)

_WALKABLE_ROOMS = (EMPTY, DOOR_OPEN, GOAL)


@dataclass
class EpisodeState:
    """Mutable view of one running episode (value-semantic between steps)."""

    level: Level
    grid: np.ndarray
    pos: tuple[int, int]
    facing: int
    t: int
    enemy_hp: int
    reds_left: int
    latched: bool = False
    latch_reward: float = 0.0

    def clone(self) -> "EpisodeState":
        return EpisodeState(level=self.level, grid=self.grid.copy(),
                            pos=self.pos, facing=self.facing, t=self.t,
                            enemy_hp=self.enemy_hp, reds_left=self.reds_left,
                            latched=self.latched, latch_reward=self.latch_reward)


def reset_level(spec: TaskSpec, level: Level) -> EpisodeState:
    reds = int(np.count_nonzero(level.grid == RED))
    hp = ENEMY_MAX_HP if spec.kind is TaskKind.RANGED else 0
    return EpisodeState(level=level, grid=level.grid.copy(), pos=level.start,
                        facing=level.start_facing, t=0, enemy_hp=hp,
                        reds_left=reds)


def _walkable(spec: TaskSpec, tile: int) -> bool:
    if spec.kind is TaskKind.MULTIROOM:
        return tile in _WALKABLE_ROOMS
    if spec.kind is TaskKind.POTIONS:
        return tile in (EMPTY, RED, ITEM)
    if spec.kind is TaskKind.MAZE:
        return tile in (EMPTY, GOAL)
    return tile == EMPTY


def step_episode(spec: TaskSpec, state: EpisodeState,
                 action: int) -> tuple[EpisodeState, np.ndarray, float]:
    """Advance one timestep; returns (next state, its observation, reward)."""
    if state.t >= spec.horizon:
        raise UsageError(f"episode already at horizon {spec.horizon}")
    if not 0 <= action < spec.n_actions:
        raise UsageError(f"action {action} out of range for {spec.name}")

    nxt = state.clone()
    nxt.t = state.t + 1
    if state.latched:
        return nxt, encode_observation(spec, nxt), state.latch_reward

    reward = 0.0
    terminal = False
    kind = spec.kind

    if kind is TaskKind.MULTIROOM:
        if action == ACTION_FORWARD:
            dr, dc = FACING_VECTORS[nxt.facing]
            tr, tc = nxt.pos[0] + dr, nxt.pos[1] + dc
            if _walkable(spec, int(nxt.grid[tr, tc])):
                nxt.pos = (tr, tc)
        elif action == ACTION_LEFT:
            nxt.facing = (nxt.facing + 3) % 4
        elif action == ACTION_RIGHT:
            nxt.facing = (nxt.facing + 1) % 4
        else:  # open door ahead
            dr, dc = FACING_VECTORS[nxt.facing]
            tr, tc = nxt.pos[0] + dr, nxt.pos[1] + dc
            if nxt.grid[tr, tc] == DOOR_CLOSED:
                nxt.grid[tr, tc] = DOOR_OPEN
        if nxt.pos == nxt.level.goal:
            reward = 1.0

    elif kind is TaskKind.POTIONS:
        dr, dc = COMPASS[action]
        tr, tc = nxt.pos[0] + dr, nxt.pos[1] + dc
        tile = int(nxt.grid[tr, tc])
        if _walkable(spec, tile):
            nxt.pos = (tr, tc)
            if tile == RED:
                reward = 1.0
                nxt.grid[tr, tc] = EMPTY
                nxt.reds_left -= 1
                terminal = nxt.reds_left == 0
            elif tile == ITEM:
                reward = -0.5
                nxt.grid[tr, tc] = EMPTY

    elif kind is TaskKind.MAZE:
        dr, dc = COMPASS[action]
        tr, tc = nxt.pos[0] + dr, nxt.pos[1] + dc
        if _walkable(spec, int(nxt.grid[tr, tc])):
            nxt.pos = (tr, tc)
        if chebyshev(nxt.pos, nxt.level.goal) <= 1:
            reward = 10.0

    else:  # ranged attack task
        if action < 8:
            dr, dc = COMPASS[action]
            tr, tc = nxt.pos[0] + dr, nxt.pos[1] + dc
            if _walkable(spec, int(nxt.grid[tr, tc])):
                nxt.pos = (tr, tc)
        elif action == ACTION_MELEE:
            if nxt.enemy_hp > 0 and chebyshev(nxt.pos, nxt.level.enemy) == 1:
                nxt.enemy_hp -= 1
                terminal = nxt.enemy_hp == 0
        else:  # ranged attack
            if nxt.enemy_hp > 0 and legal_ranged_cell(nxt.grid, nxt.pos,
                                                      nxt.level.enemy):
                reward = 1.0
                nxt.enemy_hp -= 1
                terminal = nxt.enemy_hp == 0

    if terminal:
        nxt.latched = True
        nxt.latch_reward = reward
    return nxt, encode_observation(spec, nxt), reward


def ground_truth_reward(spec: TaskSpec, state: EpisodeState, action: int,
                        next_state: EpisodeState) -> float:
    """Task reward of a transition, recomputed from the state pair."""
    if state.latched:
        return state.latch_reward
    kind = spec.kind
    if kind is TaskKind.MULTIROOM:
        return 1.0 if next_state.pos == state.level.goal else 0.0
    if kind is TaskKind.POTIONS:
        if next_state.reds_left < state.reds_left:
            return 1.0
        items_before = int(np.count_nonzero(state.grid == ITEM))
        items_after = int(np.count_nonzero(next_state.grid == ITEM))
        return -0.5 if items_after < items_before else 0.0
    if kind is TaskKind.MAZE:
        return 10.0 if chebyshev(next_state.pos, state.level.goal) <= 1 else 0.0
    if (action == ACTION_RANGED and state.enemy_hp > 0
            and legal_ranged_cell(state.grid, state.pos, state.level.enemy)):
        return 1.0
    return 0.0


# ---------------------------------------------------------------------------
# observation encoding (layout documented in tasks module)


def encode_observation(spec: TaskSpec, state: EpisodeState) -> np.ndarray:
    parts = [_grid_block(spec, state)]
    if spec.kind is TaskKind.RANGED:
        parts.append(_ranged_aux(state))
    if spec.kind is TaskKind.MULTIROOM:
        facing = np.zeros(4)
        facing[state.facing] = 1.0
        parts.append(facing)
        parts.append(_local_view(spec, state))
    return np.concatenate(parts)


def reward_observation(spec: TaskSpec, obs: np.ndarray) -> np.ndarray:
    """Prefix of a policy observation visible to reward models."""
    return obs[: spec.reward_obs_dim]


def _grid_block(spec: TaskSpec, state: EpisodeState) -> np.ndarray:
    """Tile one-hots plus an agent channel. The agent occludes the tile it
    stands on, so covering the goal visibly removes it from the encoding."""
    channels = channel_array(spec)
    onehot = (state.grid[:, :, None] == channels[None, None, :]).astype(np.float64)
    onehot[state.pos[0], state.pos[1], :] = 0.0
    agent = np.zeros((spec.size, spec.size, 1))
    agent[state.pos[0], state.pos[1], 0] = 1.0
    return np.concatenate([onehot, agent], axis=2).reshape(-1)


def _ranged_aux(state: EpisodeState) -> np.ndarray:
    span = ATTR_HI - ATTR_LO + 1
    out = np.zeros(4 * span + ENEMY_MAX_HP + 1)
    attrs = (*state.level.agent_attrs, *state.level.enemy_attrs)
    for i, a in enumerate(attrs):
        out[i * span + (a - ATTR_LO)] = 1.0
    out[4 * span + state.enemy_hp] = 1.0
    return out


def _local_view(spec: TaskSpec, state: EpisodeState) -> np.ndarray:
    """Forward-facing window, agent at the bottom-center cell; cells outside
    the grid read as walls."""
    side = spec.local_view
    fvec = FACING_VECTORS[state.facing]
    rvec = FACING_VECTORS[(state.facing + 1) % 4]
    half = side // 2
    view = np.full((side, side), WALL, dtype=np.int8)
    r0, c0 = state.pos
    for i in range(side):
        ahead = side - 1 - i
        for j in range(side):
            lat = j - half
            r = r0 + fvec[0] * ahead + rvec[0] * lat
            c = c0 + fvec[1] * ahead + rvec[1] * lat
            if 0 <= r < spec.size and 0 <= c < spec.size:
                view[i, j] = state.grid[r, c]
    channels = channel_array(spec)
    onehot = (view[:, :, None] == channels[None, None, :]).astype(np.float64)
    onehot[side - 1, half, :] = 0.0
    agent = np.zeros((side, side, 1))
    agent[side - 1, half, 0] = 1.0
    return np.concatenate([onehot, agent], axis=2).reshape(-1)
