"""Pairs of hard-to-distinguish instances showing why a positive minimum merit
and a finite Lipschitz constant are both needed for sublinear fairness regret."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fairpolicy import fair_policy
from ..merit import MeritFunction
from .mab import MabInstance


@dataclass(frozen=True)
class Fixture:
    name: str
    instance: MabInstance
    merit: MeritFunction

    @property
    def optimal_policy(self) -> np.ndarray:
        return fair_policy(self.merit, self.instance.means)


def lowerbound_fixtures(horizon: int = 100) -> list[Fixture]:
    """Two instance pairs parameterized by the horizon ``T``, with ``theta = 1/sqrt(T)``.

    * ``min_merit_*``: Gaussian arms (variance 1/2) with means ``(theta, 2 theta)``
      and ``(2 theta, 2 theta)`` under the identity merit, which has no positive
      lower bound near zero.
    * ``lipschitz_*``: Gaussian arms with means ``(theta, 0)`` and ``(0, 0)``
      under the piecewise-linear merit with slope ``sqrt(T)``.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    theta = 1.0 / np.sqrt(horizon)
    sigma = np.sqrt(0.5)
    identity = MeritFunction.identity(eval_domain=(min(1e-6, theta / 2), max(1.0, 2 * theta)))
    steep = MeritFunction.piecewise_linear(np.sqrt(horizon))
    return [
        Fixture("min_merit_1", MabInstance([theta, 2 * theta], "gaussian", sigma), identity),
        Fixture("min_merit_2", MabInstance([2 * theta, 2 * theta], "gaussian", sigma), identity),
        Fixture("lipschitz_1", MabInstance([theta, 0.0], "gaussian", sigma), steep),
        Fixture("lipschitz_2", MabInstance([0.0, 0.0], "gaussian", sigma), steep),
    ]
