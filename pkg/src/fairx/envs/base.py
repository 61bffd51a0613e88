from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..rng import Rng, batch_shape


class Environment(ABC):
    """Interaction protocol used by the harness.

    ``reset`` binds the environment's random stream and the number of lockstep
    replications; then each round ``observe`` returns the arms' contexts
    (``None`` for multi-armed bandits) and ``step`` returns the sampled arms'
    rewards plus a mask of replications whose round counts. Simulators accept
    every round; replay environments only accept matched events.
    """

    n_arms: int
    dim: int | None = None

    def reset(self, rng: Rng, n_runs: int | None = None) -> None:
        self._rng = rng
        self.batch = batch_shape(n_runs)

    def observe(self) -> np.ndarray | None:
        return None

    @abstractmethod
    def step(self, arm) -> tuple[np.ndarray, np.ndarray]: ...

    def exhausted(self) -> np.ndarray:
        return np.zeros(self.batch, bool)

    def describe(self) -> str:
        return type(self).__name__


def chosen_context(contexts, arm) -> np.ndarray | None:
    """Context row of the sampled arm, per replication."""
    if contexts is None:
        return None
    idx = np.asarray(arm)[..., None, None]
    return np.take_along_axis(contexts, idx, axis=-2)[..., 0, :]
