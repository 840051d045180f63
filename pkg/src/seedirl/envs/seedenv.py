"""Seed-level sets and episode sampling over them.

A `SeedEnvSpec` pins a task to a fixed list of level seeds: the first n
distinct, generatable draws from the seed stream derived from a master seed.
`EnvMode` wraps either such a fixed set or the fully procedural distribution
(a fresh level per reset) behind one `reset_episode` call.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from numpy.random import Generator

from ..errors import ConfigurationError, FormatVersionError, GenerationError
from ..rng import split_seed
from .episode import EpisodeState, reset_level
from .levels import Level, generate_level
from .tasks import TaskSpec, task_by_name

SEEDENV_FORMAT = "seedenv-v1"


@dataclass(frozen=True)
class SeedEnvSpec:
    """A task bound to n fixed level seeds (the reward-learning world)."""

    task_name: str
    master_seed: int
    level_seeds: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.level_seeds)


def make_seed_env(spec: TaskSpec, n: int, master_seed: int) -> SeedEnvSpec:
    """First n distinct level seeds from the master-seed stream that
    actually generate (unsolvable draws are skipped)."""
    if n < 1:
        raise ConfigurationError("a seed set needs at least one level")
    seeds: list[int] = []
    seen: set[int] = set()
    index = 0
    while len(seeds) < n:
        candidate = split_seed(master_seed, index)
        index += 1
        if candidate in seen:
            continue
        seen.add(candidate)
        try:
            generate_level(spec, candidate)
        except GenerationError:
            continue
        seeds.append(candidate)
    return SeedEnvSpec(task_name=spec.name, master_seed=master_seed,
                       level_seeds=tuple(seeds))


class EnvMode:
    """Episode source: a fixed seed set, or fresh procedural levels."""

    def __init__(self, spec: TaskSpec, seed_env: SeedEnvSpec | None = None):
        if seed_env is not None and seed_env.task_name != spec.name:
            raise ConfigurationError(
                f"seed set is for task {seed_env.task_name!r}, not {spec.name!r}")
        self.spec = spec
        self.seed_env = seed_env
        self._levels: list[Level] | None = None
        if seed_env is not None:
            self._levels = [generate_level(spec, s) for s in seed_env.level_seeds]

    @property
    def is_procedural(self) -> bool:
        return self.seed_env is None

    @property
    def describe(self) -> str:
        if self.seed_env is None:
            return "procedural"
        return f"seed-set(n={self.seed_env.n})"

    def levels(self) -> list[Level]:
        if self._levels is None:
            raise ConfigurationError("procedural mode has no fixed level list")
        return self._levels

    def sample_level(self, rng: Generator) -> Level:
        if self._levels is not None:
            return self._levels[int(rng.integers(len(self._levels)))]
        while True:
            seed = int(rng.integers(0, 2 ** 63))
            try:
                return generate_level(self.spec, seed)
            except GenerationError:
                continue


def reset_episode(mode: EnvMode, rng: Generator) -> EpisodeState:
    return reset_level(mode.spec, mode.sample_level(rng))


def save_seed_env(path: str | Path, env: SeedEnvSpec) -> None:
    lines = [SEEDENV_FORMAT, f"task {env.task_name}",
             f"master_seed {env.master_seed}", f"n {env.n}"]
    lines += [f"seed {s}" for s in env.level_seeds]
    Path(path).write_text("\n".join(lines) + "\n")


def load_seed_env(path: str | Path) -> SeedEnvSpec:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SEEDENV_FORMAT:
        head = lines[0] if lines else "<empty>"
        raise FormatVersionError(f"{path}: expected {SEEDENV_FORMAT}, got {head}")
    fields = dict(line.split(" ", 1) for line in lines[1:4])
    task_name = fields["task"]
    task_by_name(task_name)  # validates the name
    n = int(fields["n"])
    seeds = tuple(int(line.split(" ", 1)[1]) for line in lines[4:4 + n])
    if len(seeds) != n:
        raise FormatVersionError(f"{path}: expected {n} seeds, got {len(seeds)}")
    return SeedEnvSpec(task_name=task_name,
                       master_seed=int(fields["master_seed"]),
                       level_seeds=seeds)
