"""Benchmark POMDPs shipped with the toolkit."""

from .tiger import (
    HEAR_LEFT,
    HEAR_RIGHT,
    LISTEN,
    OPEN_LEFT,
    OPEN_RIGHT,
    TIGER_LEFT,
    TIGER_RIGHT,
    TigerConfig,
    tiger_model,
)
from .rocksample import (
    DEFAULT_MAP_TEXT,
    RockSampleConfig,
    RockSampleModel,
    RockSampleState,
    SampleOffRock,
    parse_map,
    rocksample_model,
    sample_reward,
    sensor_accuracy,
)

__all__ = [
    "TigerConfig",
    "tiger_model",
    "LISTEN",
    "OPEN_LEFT",
    "OPEN_RIGHT",
    "HEAR_LEFT",
    "HEAR_RIGHT",
    "TIGER_LEFT",
    "TIGER_RIGHT",
    "RockSampleConfig",
    "RockSampleModel",
    "RockSampleState",
    "SampleOffRock",
    "sensor_accuracy",
    "sample_reward",
    "parse_map",
    "rocksample_model",
    "DEFAULT_MAP_TEXT",
]
