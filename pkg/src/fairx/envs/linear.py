from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rng import Rng
from .base import Environment, chosen_context


@dataclass(frozen=True)
class SyntheticGaussian:
    """Contexts drawn uniformly on the unit sphere (normalized Gaussians)."""

    def draw(self, rng: Rng, n_arms: int, dim: int) -> np.ndarray:
        z = rng.standard_normal((n_arms, dim))
        return z / np.linalg.norm(z, axis=-1, keepdims=True)


@dataclass(frozen=True)
class FixedContexts:
    """The same ``K x d`` context matrix every round."""

    contexts: np.ndarray

    def draw(self, rng: Rng, n_arms: int, dim: int) -> np.ndarray:
        batch = np.shape(rng.random(()))
        return np.broadcast_to(self.contexts, batch + self.contexts.shape).copy()


@dataclass
class LinearInstance(Environment):
    """Linear bandit with reward ``theta_star . x + N(0, noise_sigma^2)``.

    Contexts from any source are rescaled so every row has norm at most one.
    ``noise_sigma=0`` gives noiseless rewards.
    """

    theta_star: np.ndarray
    n_arms: int
    noise_sigma: float = 0.1
    context_source: object = field(default_factory=SyntheticGaussian)

    def __post_init__(self):
        self.theta_star = np.asarray(self.theta_star, float)
        if self.theta_star.ndim != 1:
            raise ValueError("theta_star must be a vector")
        if np.linalg.norm(self.theta_star) > 1 + 1e-12:
            raise ValueError("theta_star must have norm at most 1")
        if self.n_arms < 1:
            raise ValueError("need at least one arm")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if isinstance(self.context_source, FixedContexts):
            ctx = np.asarray(self.context_source.contexts, float)
            if ctx.shape != (self.n_arms, self.dim):
                raise ValueError(f"fixed contexts must have shape {(self.n_arms, self.dim)}")
            self.context_source = FixedContexts(_unit_ball(ctx))

    @property
    def dim(self) -> int:
        return self.theta_star.size

    def contexts(self, rng: Rng) -> np.ndarray:
        return _unit_ball(self.context_source.draw(rng, self.n_arms, self.dim))

    def reveal(self, contexts, arm, rng: Rng) -> np.ndarray:
        x = chosen_context(contexts, arm)
        noise = rng.standard_normal(()) if self.noise_sigma > 0 else 0.0
        return x @ self.theta_star + self.noise_sigma * noise

    def reset(self, rng, n_runs=None):
        super().reset(rng, n_runs)
        self._contexts = None

    def observe(self):
        self._contexts = self.contexts(self._rng)
        return self._contexts

    def step(self, arm):
        return self.reveal(self._contexts, arm, self._rng), np.ones(self.batch, bool)

    def describe(self) -> str:
        return f"linear{self.n_arms}x{self.dim}"


def _unit_ball(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.maximum(norms, 1.0)


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim)
    return z / np.linalg.norm(z)
