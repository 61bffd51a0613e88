from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import Rng
from .base import Environment

NOISES = ("bernoulli", "gaussian", "uniform")


@dataclass
class MabInstance(Environment):
    """Stochastic multi-armed bandit with planted arm means.

    ``noise`` is ``"bernoulli"``, ``"gaussian"`` (standard deviation
    ``sigma``) or ``"uniform"`` (symmetric around the mean, inside
    ``reward_range``).
    """

    means: np.ndarray
    noise: str = "bernoulli"
    sigma: float = 1.0
    reward_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        self.means = np.asarray(self.means, float)
        if self.means.ndim != 1 or self.means.size == 0:
            raise ValueError("means must be a non-empty vector")
        if self.noise not in NOISES:
            raise ValueError(f"unknown noise {self.noise!r}; expected one of {NOISES}")
        if self.noise == "bernoulli" and np.any((self.means < 0) | (self.means > 1)):
            raise ValueError("Bernoulli arms need means in [0, 1]")
        if self.noise == "gaussian" and self.sigma <= 0:
            raise ValueError("Gaussian noise needs sigma > 0")
        if self.noise == "uniform":
            lo, hi = self.reward_range
            if np.any((self.means < lo) | (self.means > hi)):
                raise ValueError("uniform arms need means inside reward_range")

    @property
    def n_arms(self) -> int:
        return self.means.size

    def pull(self, arm, rng: Rng) -> np.ndarray:
        """One reward draw per replication from the sampled arm."""
        arm = np.asarray(arm)
        if np.any((arm < 0) | (arm >= self.n_arms)):
            raise IndexError(f"arm index out of range for {self.n_arms} arms")
        mu = self.means[arm]
        if self.noise == "bernoulli":
            return (rng.random(()) < mu).astype(float)
        if self.noise == "gaussian":
            return mu + self.sigma * rng.standard_normal(())
        lo, hi = self.reward_range
        half = np.minimum(mu - lo, hi - mu)
        return mu + half * (2.0 * rng.random(()) - 1.0)

    def step(self, arm):
        return self.pull(arm, self._rng), np.ones(self.batch, bool)

    def describe(self) -> str:
        return f"mab{self.n_arms}-{self.noise}"
