"""Configuration-driven experiment pipeline, ablation suite, and reporting."""

from .config import (METHODS, ExperimentConfig, default_config, load_config,
                     parse_overrides, to_airl_config, to_expert_config)
from .runner import (run_ablation_suite, run_experiment, read_summary,
                     write_metrics_csv)
from .report import emit_report

__all__ = [
    "METHODS", "ExperimentConfig", "default_config", "load_config",
    "parse_overrides", "to_airl_config", "to_expert_config",
    "run_experiment", "run_ablation_suite", "read_summary",
    "write_metrics_csv", "emit_report",
]