from .episode import (EpisodeState, encode_observation, ground_truth_reward,
                      reset_level, reward_observation, step_episode)
from .levels import Level, generate_level, render_level_text
from .oracles import oracle_return, oracle_rollout
from .seedenv import (EnvMode, SeedEnvSpec, load_seed_env, make_seed_env,
                      reset_episode, save_seed_env)
from .tasks import (FULL_SIZE_TASKS, TASK_NAMES, TaskKind, TaskSpec,
                    task_by_name)

__all__ = [
    "EnvMode", "EpisodeState", "FULL_SIZE_TASKS", "Level", "SeedEnvSpec",
    "TASK_NAMES", "TaskKind", "TaskSpec", "encode_observation",
    "generate_level", "ground_truth_reward", "load_seed_env", "make_seed_env",
    "oracle_return", "oracle_rollout", "render_level_text", "reset_episode",
    "reset_level", "reward_observation", "save_seed_env", "step_episode",
    "task_by_name",
]
