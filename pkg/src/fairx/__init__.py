"""Merit-based fair exposure for stochastic and linear bandits."""

from .fairpolicy import (
    RegretTrace,
    average_exposure,
    average_optimal_exposure,
    fair_policy,
    fairness_regret_step,
    is_policy,
    reward_regret_step,
)
from .merit import MeritDomainError, MeritFunction
from .oracle import FairOracle

__version__ = "0.1.0"

__all__ = [
    "FairOracle", "MeritDomainError", "MeritFunction", "RegretTrace", "average_exposure",
    "average_optimal_exposure", "fair_policy", "fairness_regret_step", "is_policy",
    "reward_regret_step",
]
