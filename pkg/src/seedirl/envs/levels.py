"""Seeded procedural level generation with solvability guarantees.

`generate_level(spec, seed)` is a pure function: the same (task, seed) pair
always reproduces the same level bit for bit. Layouts are rejection-sampled
(at most R attempts) until a solvability oracle accepts:

    rooms   : goal reachable from the start, doors counted as passable
    potions : every red potion reachable, other items counted as passable
    maze    : goal reachable
    ranged  : some cell with a legal ranged shot reachable
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import GenerationError
from ..rng import rng_from
from .tasks import (ACTION_FORWARD, ACTION_LEFT, ACTION_OPEN, ACTION_RIGHT,
                    ATTR_HI, ATTR_LO, COMPASS, DOOR_CLOSED, DOOR_OPEN, EMPTY,
                    ENEMY, FACING_VECTORS, GOAL, ITEM, RANGED_MAX, RANGED_MIN,
                    RED, TILE_CHARS, WALL, TaskKind, TaskSpec)

MAX_GENERATION_ATTEMPTS = 100


@dataclass(frozen=True)
class Level:
    """Immutable generated layout; episode state copies the grid to mutate."""

    task: TaskKind
    seed: int
    grid: np.ndarray          # int8 (size, size) of tile codes
    start: tuple[int, int]
    start_facing: int = 0     # rooms task only
    goal: tuple[int, int] | None = None
    enemy: tuple[int, int] | None = None
    agent_attrs: tuple[int, int] = (0, 0)
    enemy_attrs: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.grid.setflags(write=False)


def generate_level(spec: TaskSpec, seed: int) -> Level:
    rng = rng_from(seed)
    build = _BUILDERS[spec.kind]
    for _ in range(MAX_GENERATION_ATTEMPTS):
        level = build(spec, seed, rng)
        if level is not None:
            return level
    raise GenerationError(
        f"no solvable {spec.name} level after {MAX_GENERATION_ATTEMPTS} "
        f"attempts (seed {seed})")


def _empty_bordered_grid(size: int) -> np.ndarray:
    grid = np.zeros((size, size), dtype=np.int8)
    grid[0, :] = WALL
    grid[-1, :] = WALL
    grid[:, 0] = WALL
    grid[:, -1] = WALL
    return grid


def _place_on_empty(grid: np.ndarray, rng: np.random.Generator, count: int,
                    tile: int) -> list[tuple[int, int]]:
    """Claim `count` random empty cells for `tile`; [] if short on space."""
    rows, cols = np.nonzero(grid == EMPTY)
    if len(rows) < count:
        return []
    picks = rng.choice(len(rows), size=count, replace=False)
    cells = [(int(rows[i]), int(cols[i])) for i in picks]
    for r, c in cells:
        grid[r, c] = tile
    return cells


def reachable_mask(passable: np.ndarray, start: tuple[int, int],
                   diagonal: bool) -> np.ndarray:
    """Flood fill over a boolean passability mask."""
    seen = np.zeros_like(passable, dtype=bool)
    if not passable[start]:
        return seen
    seen[start] = True
    queue = deque([start])
    moves = COMPASS if diagonal else COMPASS[::2]
    h, w = passable.shape
    while queue:
        r, c = queue.popleft()
        for dr, dc in moves:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and passable[nr, nc] and not seen[nr, nc]:
                seen[nr, nc] = True
                queue.append((nr, nc))
    return seen


def bresenham_cells(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """Grid cells strictly between a and b on the rasterized segment."""
    r0, c0 = a
    r1, c1 = b
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 > r0 else -1
    sc = 1 if c1 > c0 else -1
    err = dr - dc
    cells = []
    r, c = r0, c0
    while (r, c) != (r1, c1):
        e2 = 2 * err
        if e2 > -dc:
            err -= dc
            r += sr
        if e2 < dr:
            err += dr
            c += sc
        if (r, c) != (r1, c1):
            cells.append((r, c))
    return cells


def line_of_sight(grid: np.ndarray, a: tuple[int, int], b: tuple[int, int]) -> bool:
    return all(grid[r, c] != WALL for r, c in bresenham_cells(a, b))


def chebyshev(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def legal_ranged_cell(grid: np.ndarray, cell: tuple[int, int],
                      enemy: tuple[int, int]) -> bool:
    return (RANGED_MIN <= chebyshev(cell, enemy) <= RANGED_MAX
            and line_of_sight(grid, cell, enemy))


def rooms_shortest_actions(grid: np.ndarray, start: tuple[int, int],
                           facing: int,
                           goal: tuple[int, int]) -> list[int] | None:
    """Fewest-action route for the room task via uniform-cost search over
    (row, col, facing); a closed door ahead costs an open plus a forward."""
    from heapq import heappop, heappush

    if start == goal:
        return []
    origin = (*start, facing)
    best = {origin: 0}
    heap = [(0, origin)]
    parent: dict[tuple, tuple[tuple, list[int]]] = {}
    goal_node = None
    while heap:
        cost, node = heappop(heap)
        if cost > best.get(node, 1 << 30):
            continue
        r, c, f = node
        if (r, c) == goal:
            goal_node = node
            break
        moves = [((r, c, (f + 3) % 4), 1, [ACTION_LEFT]),
                 ((r, c, (f + 1) % 4), 1, [ACTION_RIGHT])]
        dr, dc = FACING_VECTORS[f]
        ahead = (r + dr, c + dc)
        tile = int(grid[ahead])
        if tile in (EMPTY, DOOR_OPEN, GOAL):
            moves.append(((*ahead, f), 1, [ACTION_FORWARD]))
        elif tile == DOOR_CLOSED:
            moves.append(((*ahead, f), 2, [ACTION_OPEN, ACTION_FORWARD]))
        for nxt, w, acts in moves:
            nc = cost + w
            if nc < best.get(nxt, 1 << 30):
                best[nxt] = nc
                parent[nxt] = (node, acts)
                heappush(heap, (nc, nxt))
    if goal_node is None:
        return None
    actions: list[int] = []
    node = goal_node
    while node != origin:
        node, acts = parent[node]
        actions = acts + actions
    return actions


# ---------------------------------------------------------------------------
# per-task builders; each returns None when the sampled layout is unsolvable


def _build_multiroom(spec: TaskSpec, seed: int, rng: np.random.Generator):
    size = spec.size
    grid = _empty_bordered_grid(size)
    n_rooms = int(rng.choice(spec.room_counts))
    vertical = bool(rng.integers(2))

    # split positions leave every room at least one tile wide
    lo, hi = 2, size - 3
    candidates = np.arange(lo, hi + 1)
    n_splits = n_rooms - 1
    for _ in range(20):
        splits = np.sort(rng.choice(candidates, size=n_splits, replace=False))
        if n_splits < 2 or np.all(np.diff(splits) >= 2):
            break
    else:
        return None

    for s in splits:
        door = int(rng.integers(1, size - 1))
        if vertical:
            grid[:, s] = WALL
            grid[door, s] = DOOR_CLOSED
        else:
            grid[s, :] = WALL
            grid[s, door] = DOOR_CLOSED

    axis = 1 if vertical else 0

    def room_cells(room_idx: int) -> list[tuple[int, int]]:
        lo_b = 1 if room_idx == 0 else splits[room_idx - 1] + 1
        hi_b = size - 2 if room_idx == n_splits else splits[room_idx] - 1
        out = []
        for r in range(1, size - 1):
            for c in range(1, size - 1):
                if lo_b <= (r, c)[axis] <= hi_b and grid[r, c] == EMPTY:
                    out.append((r, c))
        return out

    first = room_cells(0)
    last = room_cells(n_splits)
    if not first or not last:
        return None
    start = first[int(rng.integers(len(first)))]
    goal = last[int(rng.integers(len(last)))]
    if goal == start:
        return None
    grid[goal] = GOAL
    facing = int(rng.integers(4))

    # the goal must be worth reaching within the horizon, not merely connected
    actions = rooms_shortest_actions(grid, start, facing, goal)
    if actions is None or len(actions) > spec.horizon - 2:
        return None
    return Level(task=spec.kind, seed=seed, grid=grid, start=start,
                 start_facing=facing, goal=goal)


def _build_potions(spec: TaskSpec, seed: int, rng: np.random.Generator):
    grid = _empty_bordered_grid(spec.size)
    n_walls = int(rng.integers(spec.wall_range[0], spec.wall_range[1] + 1))
    n_red = int(rng.integers(spec.red_range[0], spec.red_range[1] + 1))
    n_item = int(rng.integers(spec.item_range[0], spec.item_range[1] + 1))
    _place_on_empty(grid, rng, n_walls, WALL)
    reds = _place_on_empty(grid, rng, n_red, RED)
    items = _place_on_empty(grid, rng, n_item, ITEM)
    starts = _place_on_empty(grid, rng, 1, EMPTY)
    if not reds or not items or not starts:
        return None
    start = starts[0]
    passable = grid != WALL
    seen = reachable_mask(passable, start, diagonal=True)
    if not all(seen[cell] for cell in reds):
        return None
    return Level(task=spec.kind, seed=seed, grid=grid, start=start)


def _build_maze(spec: TaskSpec, seed: int, rng: np.random.Generator):
    grid = _empty_bordered_grid(spec.size)
    interior = (spec.size - 2) ** 2
    n_walls = int(round(spec.wall_density * interior))
    _place_on_empty(grid, rng, n_walls, WALL)
    goals = _place_on_empty(grid, rng, 1, GOAL)
    starts = _place_on_empty(grid, rng, 1, EMPTY)
    if not goals or not starts:
        return None
    goal, start = goals[0], starts[0]
    if chebyshev(start, goal) <= 1:
        return None  # spawning already next to the goal trivializes the level
    passable = grid != WALL
    if not reachable_mask(passable, start, diagonal=True)[goal]:
        return None
    return Level(task=spec.kind, seed=seed, grid=grid, start=start, goal=goal)


def _build_ranged(spec: TaskSpec, seed: int, rng: np.random.Generator):
    grid = _empty_bordered_grid(spec.size)
    n_walls = int(rng.integers(spec.wall_range[0], spec.wall_range[1] + 1))
    _place_on_empty(grid, rng, n_walls, WALL)
    enemies = _place_on_empty(grid, rng, 1, ENEMY)
    starts = _place_on_empty(grid, rng, 1, EMPTY)
    if not enemies or not starts:
        return None
    enemy, start = enemies[0], starts[0]
    agent_attrs = (int(rng.integers(ATTR_LO, ATTR_HI + 1)),
                   int(rng.integers(ATTR_LO, ATTR_HI + 1)))
    enemy_attrs = (int(rng.integers(ATTR_LO, ATTR_HI + 1)),
                   int(rng.integers(ATTR_LO, ATTR_HI + 1)))
    passable = (grid != WALL) & (grid != ENEMY)
    seen = reachable_mask(passable, start, diagonal=True)
    rows, cols = np.nonzero(seen)
    if not any(legal_ranged_cell(grid, (int(r), int(c)), enemy)
               for r, c in zip(rows, cols)):
        return None
    return Level(task=spec.kind, seed=seed, grid=grid, start=start,
                 enemy=enemy, agent_attrs=agent_attrs, enemy_attrs=enemy_attrs)


_BUILDERS = {
    TaskKind.MULTIROOM: _build_multiroom,
    TaskKind.POTIONS: _build_potions,
    TaskKind.MAZE: _build_maze,
    TaskKind.RANGED: _build_ranged,
}


def render_level_text(level: Level) -> str:
    """One character per tile; A marks the agent start."""
    rows = []
    for r in range(level.grid.shape[0]):
        row = []
        for c in range(level.grid.shape[1]):
            row.append("A" if (r, c) == level.start
                       else TILE_CHARS[int(level.grid[r, c])])
        rows.append("".join(row))
    return "\n".join(rows)
