"""Bandit environments: synthetic multi-armed and linear bandits, multi-label
datasets with random Fourier feature contexts, and logged-data replay."""

from .base import Environment, chosen_context
from .fixtures import Fixture, lowerbound_fixtures
from .linear import FixedContexts, LinearInstance, SyntheticGaussian, random_unit_vector
from .mab import MabInstance
from .multilabel import (
    MultilabelEnv,
    MultilabelFormatError,
    RandomFourierFeatures,
    load_multilabel,
    median_bandwidth,
    multilabel_to_linear,
    parse_multilabel,
    split_rows,
)
from .replay import (
    ReplayEnv,
    ReplayExhausted,
    ReplayFormatError,
    ReplayLog,
    ReplayOutcome,
    parse_replay_log,
    read_replay_log,
    replay_step,
    synthetic_uniform_log,
    validate_replay_log,
    write_replay_log,
)

__all__ = [
    "Environment", "FixedContexts", "Fixture", "LinearInstance", "MabInstance", "MultilabelEnv",
    "MultilabelFormatError", "RandomFourierFeatures", "ReplayEnv", "ReplayExhausted",
    "ReplayFormatError", "ReplayLog", "ReplayOutcome", "SyntheticGaussian", "chosen_context",
    "load_multilabel", "lowerbound_fixtures", "median_bandwidth", "multilabel_to_linear",
    "parse_multilabel", "parse_replay_log", "random_unit_vector", "read_replay_log",
    "replay_step", "split_rows", "synthetic_uniform_log", "validate_replay_log",
    "write_replay_log",
]
