"""Task catalog: grid sizes, horizons, action sets and observation layouts.

Tile codes stored in level grids (shared across tasks):

    0 empty, 1 wall, 2 closed door, 3 open door, 4 goal,
    5 red potion, 6 other item, 7 enemy

Observation encoding, frozen per task. The flat observation vector is

    [ global grid one-hot | task aux block | policy-only extras ]

where the global block scans the grid row-major and emits, per cell, one
indicator per task channel (channel order below) plus a trailing agent
channel. The reward/discriminator input is the prefix up to and including
the aux block; policy-only extras (heading and forward local view, used by
the room task) are never shown to reward models.

Channel orders (global block, before the agent channel):

    rooms   : empty, wall, closed door, open door, goal
    potions : empty, wall, red potion, other item
    maze    : empty, wall, goal
    ranged  : empty, wall, enemy

Aux blocks: the ranged task appends one-hot actor attributes (2 per actor,
values 1..10) for agent then enemy, then enemy hit points one-hot (0..5).

Action sets:

    rooms   : 0 forward, 1 turn left, 2 turn right, 3 open door
    potions/maze : 8 compass moves, clockwise from north
                   (0 N, 1 NE, 2 E, 3 SE, 4 S, 5 SW, 6 W, 7 NW)
    ranged  : the 8 compass moves plus 8 melee, 9 ranged attack
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ConfigurationError

EMPTY, WALL, DOOR_CLOSED, DOOR_OPEN, GOAL, RED, ITEM, ENEMY = range(8)

TILE_CHARS = {EMPTY: ".", WALL: "#", DOOR_CLOSED: "+", DOOR_OPEN: "/",
              GOAL: "G", RED: "r", ITEM: "o", ENEMY: "E"}

COMPASS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
FACING_VECTORS = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N E S W

ENEMY_MAX_HP = 5
ATTR_LO, ATTR_HI = 1, 10
RANGED_MIN, RANGED_MAX = 2, 4

ACTION_FORWARD, ACTION_LEFT, ACTION_RIGHT, ACTION_OPEN = range(4)
ACTION_MELEE, ACTION_RANGED = 8, 9


class TaskKind(Enum):
    MULTIROOM = "multiroom"
    POTIONS = "potions"
    MAZE = "maze"
    RANGED = "ranged"


GRID_CHANNELS = {
    TaskKind.MULTIROOM: (EMPTY, WALL, DOOR_CLOSED, DOOR_OPEN, GOAL),
    TaskKind.POTIONS: (EMPTY, WALL, RED, ITEM),
    TaskKind.MAZE: (EMPTY, WALL, GOAL),
    TaskKind.RANGED: (EMPTY, WALL, ENEMY),
}

N_ACTIONS = {
    TaskKind.MULTIROOM: 4,
    TaskKind.POTIONS: 8,
    TaskKind.MAZE: 8,
    TaskKind.RANGED: 10,
}


@dataclass(frozen=True)
class TaskSpec:
    """One playable task variant (full-size or desk-scale)."""

    name: str
    kind: TaskKind
    size: int
    horizon: int
    local_view: int = 0           # rooms: forward view side length
    room_counts: tuple[int, ...] = ()
    red_range: tuple[int, int] = (0, 0)
    item_range: tuple[int, int] = (0, 0)
    wall_range: tuple[int, int] = (0, 0)
    wall_density: float = 0.0

    def __post_init__(self):
        if self.size < 5:
            raise ConfigurationError("grid too small to hold a border and content")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")

    @property
    def n_actions(self) -> int:
        return N_ACTIONS[self.kind]

    @property
    def channels(self) -> tuple[int, ...]:
        return GRID_CHANNELS[self.kind]

    @property
    def grid_obs_dim(self) -> int:
        return self.size * self.size * (len(self.channels) + 1)

    @property
    def aux_dim(self) -> int:
        if self.kind is TaskKind.RANGED:
            # 2 actors x 2 attributes x 10 values, then hp one-hot 0..5
            return 2 * 2 * (ATTR_HI - ATTR_LO + 1) + (ENEMY_MAX_HP + 1)
        return 0

    @property
    def reward_obs_dim(self) -> int:
        """Observation prefix visible to reward and discriminator nets."""
        return self.grid_obs_dim + self.aux_dim

    @property
    def obs_dim(self) -> int:
        extra = 0
        if self.kind is TaskKind.MULTIROOM:
            extra = 4 + self.local_view * self.local_view * (len(self.channels) + 1)
        return self.reward_obs_dim + extra


def _multiroom_full() -> TaskSpec:
    return TaskSpec(name="multiroom", kind=TaskKind.MULTIROOM, size=15,
                    horizon=30, local_view=7, room_counts=(2, 3))


def _multiroom_toy() -> TaskSpec:
    return TaskSpec(name="multiroom-7", kind=TaskKind.MULTIROOM, size=7,
                    horizon=20, local_view=5, room_counts=(2,))


def _potions_full() -> TaskSpec:
    return TaskSpec(name="potions", kind=TaskKind.POTIONS, size=10, horizon=20,
                    red_range=(2, 4), item_range=(2, 5), wall_range=(0, 6))


def _potions_toy() -> TaskSpec:
    return TaskSpec(name="potions-8", kind=TaskKind.POTIONS, size=8, horizon=15,
                    red_range=(1, 3), item_range=(1, 3), wall_range=(0, 4))


def _maze_full() -> TaskSpec:
    return TaskSpec(name="maze", kind=TaskKind.MAZE, size=10, horizon=20,
                    wall_density=0.25)


def _ranged_full() -> TaskSpec:
    return TaskSpec(name="ranged", kind=TaskKind.RANGED, size=10, horizon=20,
                    wall_range=(0, 5))


_FACTORIES = {
    "multiroom": _multiroom_full,
    "multiroom-7": _multiroom_toy,
    "potions": _potions_full,
    "potions-8": _potions_toy,
    "maze": _maze_full,
    "ranged": _ranged_full,
}

TASK_NAMES = tuple(_FACTORIES)
FULL_SIZE_TASKS = ("multiroom", "potions", "maze", "ranged")


def task_by_name(name: str) -> TaskSpec:
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown task {name!r}; choose from {', '.join(TASK_NAMES)}") from None


def channel_array(spec: TaskSpec) -> np.ndarray:
    return np.array(spec.channels, dtype=np.int8)
