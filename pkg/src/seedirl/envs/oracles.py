"""Scripted reference players, one per task.

These are the independent solvability and competence yardsticks: shortest
paths come from breadth-first or uniform-cost search over the true grid, not
from anything learned. `oracle_rollout` drives the real episode engine, so
its return is exactly what the scripted player earns under task dynamics.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..errors import UsageError
from .episode import EpisodeState, reset_level, step_episode
from .levels import (Level, chebyshev, legal_ranged_cell,
                     rooms_shortest_actions)
from .tasks import (ACTION_LEFT, ACTION_RANGED, COMPASS, EMPTY, GOAL, ITEM,
                    RED, WALL, TaskKind, TaskSpec)

_COMPASS_ACTION = {delta: i for i, delta in enumerate(COMPASS)}


def _bfs_path(passable: np.ndarray, start: tuple[int, int],
              targets: set[tuple[int, int]]) -> list[tuple[int, int]] | None:
    """Cells from just after `start` to the nearest target, 8-connected."""
    if start in targets:
        return []
    parent: dict[tuple[int, int], tuple[int, int]] = {start: start}
    queue = deque([start])
    h, w = passable.shape
    while queue:
        cell = queue.popleft()
        for dr, dc in COMPASS:
            nxt = (cell[0] + dr, cell[1] + dc)
            if not (0 <= nxt[0] < h and 0 <= nxt[1] < w):
                continue
            if nxt in parent or not passable[nxt]:
                continue
            parent[nxt] = cell
            if nxt in targets:
                path = [nxt]
                while parent[path[-1]] != start:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(nxt)
    return None


def _steps_to_actions(start: tuple[int, int],
                      path: list[tuple[int, int]]) -> list[int]:
    actions = []
    prev = start
    for cell in path:
        actions.append(_COMPASS_ACTION[(cell[0] - prev[0], cell[1] - prev[1])])
        prev = cell
    return actions


def _rooms_plan(spec: TaskSpec, state: EpisodeState) -> list[int]:
    if state.pos == state.level.goal:
        return [ACTION_LEFT]  # spin in place, reward keeps accruing
    actions = rooms_shortest_actions(state.grid, state.pos, state.facing,
                                     state.level.goal)
    if actions is None:
        raise UsageError("room oracle found no path to the goal")
    return actions


def _potions_plan(spec: TaskSpec, state: EpisodeState) -> list[int]:
    if state.latched or state.reds_left == 0:
        return [0]
    grid = state.grid
    reds = {(int(r), int(c)) for r, c in zip(*np.nonzero(grid == RED))}
    clean = (grid != WALL) & (grid != ITEM)  # prefer not to collect penalties
    path = _bfs_path(clean, state.pos, reds)
    if path is None:
        path = _bfs_path(grid != WALL, state.pos, reds)
    if path is None:
        raise UsageError("potion oracle found no reachable red potion")
    return _steps_to_actions(state.pos, path)


def _maze_plan(spec: TaskSpec, state: EpisodeState) -> list[int]:
    goal = state.level.goal
    if chebyshev(state.pos, goal) <= 1:
        # oscillate inside the scoring neighborhood
        if state.pos == goal:
            for a, (dr, dc) in enumerate(COMPASS):
                cell = (state.pos[0] + dr, state.pos[1] + dc)
                if state.grid[cell] == EMPTY:
                    return [a]
            return [0]
        return [_COMPASS_ACTION[(goal[0] - state.pos[0], goal[1] - state.pos[1])]]
    near = {(goal[0] + dr, goal[1] + dc) for dr, dc in COMPASS}
    near.add(goal)
    passable = (state.grid == EMPTY) | (state.grid == GOAL)
    targets = {cell for cell in near if passable[cell]}
    path = _bfs_path(passable, state.pos, targets)
    if path is None:
        raise UsageError("maze oracle found no path near the goal")
    return _steps_to_actions(state.pos, path)


def _ranged_plan(spec: TaskSpec, state: EpisodeState) -> list[int]:
    if state.latched or state.enemy_hp == 0:
        return [0]
    if legal_ranged_cell(state.grid, state.pos, state.level.enemy):
        return [ACTION_RANGED]
    passable = state.grid == EMPTY
    h, w = state.grid.shape
    targets = {(r, c) for r in range(h) for c in range(w)
               if passable[r, c] and legal_ranged_cell(state.grid, (r, c),
                                                       state.level.enemy)}
    path = _bfs_path(passable, state.pos, targets)
    if path is None:
        raise UsageError("ranged oracle found no attack position")
    return _steps_to_actions(state.pos, path)


_PLANNERS = {
    TaskKind.MULTIROOM: _rooms_plan,
    TaskKind.POTIONS: _potions_plan,
    TaskKind.MAZE: _maze_plan,
    TaskKind.RANGED: _ranged_plan,
}


def oracle_rollout(spec: TaskSpec, level: Level) -> tuple[list[int], float]:
    """Play one full fixed-horizon episode; returns (actions, total return)."""
    plan = _PLANNERS[spec.kind]
    state = reset_level(spec, level)
    queue: list[int] = []
    actions: list[int] = []
    total = 0.0
    while state.t < spec.horizon:
        if not queue:
            queue = list(plan(spec, state)) if not state.latched else [0]
        action = queue.pop(0)
        state, _, reward = step_episode(spec, state, action)
        actions.append(action)
        total += reward
    return actions, total


def oracle_return(spec: TaskSpec, level: Level) -> float:
    return oracle_rollout(spec, level)[1]
