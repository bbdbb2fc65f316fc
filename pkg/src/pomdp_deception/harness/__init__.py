"""Seeded experiment runner, metrics pipelines and CSV persistence."""

from .config import ExperimentConfig, load_config
from .metrics import (
    MetricsSummary,
    ObsRecord,
    attribute_belief_change,
    categorize_observation,
    occupancy_grid,
    reward_belief_histogram,
)
from .runner import ExperimentResult, run_experiment

__all__ = [
    "ExperimentConfig",
    "load_config",
    "MetricsSummary",
    "ObsRecord",
    "attribute_belief_change",
    "categorize_observation",
    "occupancy_grid",
    "reward_belief_histogram",
    "ExperimentResult",
    "run_experiment",
]
