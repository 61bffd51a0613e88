from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from ..merit import MeritFunction
from ..rng import Rng, batch_shape


def point_mass(arm, n_arms: int) -> np.ndarray:
    return (np.arange(n_arms) == np.asarray(arm)[..., None]).astype(float)


def ucb_width(alpha: float, count):
    """Confidence half-width ``alpha / sqrt(count)``."""
    count = np.asarray(count)
    if np.any(count < 1):
        raise ValueError("confidence width needs count >= 1; pull every arm once first")
    out = alpha / np.sqrt(count)
    return out if out.ndim else float(out)


def theory_alpha(horizon: int, n_arms: int, delta: float) -> float:
    """``sqrt(2 ln(4 T K / delta))``, the width scale with a high-probability guarantee."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(2.0 * math.log(4.0 * horizon * n_arms / delta))


class BanditAlgorithm(ABC):
    """Sequential decision rule over ``n_arms`` arms.

    ``select`` returns the policy deployed this round, a probability vector
    over the last axis; ``update`` feeds back the reward of the sampled arm.
    With ``n_runs`` set, all state carries a leading replication axis and
    ``rng`` must be an :class:`~fairx.rng.RngStreams` of that length.
    """

    name: str = ""
    fair: bool = False
    linear: bool = False

    def __init__(self, n_arms: int, *, rng: Rng, n_runs: int | None = None,
                 merit: MeritFunction | None = None):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        if self.fair and merit is None:
            raise ValueError(f"{type(self).__name__} needs a merit function")
        self.n_arms = n_arms
        self.n_runs = n_runs
        self.batch = batch_shape(n_runs)
        self.rng = rng
        self.merit = merit
        self._selected = False

    def select(self, contexts=None) -> np.ndarray:
        contexts = self._check_contexts(contexts)
        policy = self._select(contexts)
        self._selected = True
        return policy

    def update(self, arm, reward, context=None, mask=None) -> "BanditAlgorithm":
        """Consume the reward of the sampled ``arm``.

        ``context`` is the chosen arm's context vector (linear algorithms).
        ``mask`` restricts the update to some replications.
        """
        if not self._selected:
            raise RuntimeError("update called before any select")
        if self.linear and context is None:
            raise ValueError(f"{type(self).__name__} needs the chosen arm's context")
        self._update(np.asarray(arm), np.asarray(reward, float), context, mask)
        return self

    def _check_contexts(self, contexts):
        if not self.linear:
            if contexts is not None:
                raise ValueError(f"{type(self).__name__} is a multi-armed bandit and takes no contexts")
            return None
        if contexts is None:
            raise ValueError(f"{type(self).__name__} needs contexts")
        contexts = np.asarray(contexts, float)
        if contexts.shape[-2:] != (self.n_arms, self.dim):
            raise ValueError(
                f"contexts of shape {contexts.shape} do not match {self.n_arms} arms x {self.dim} dims"
            )
        return contexts

    @abstractmethod
    def _select(self, contexts) -> np.ndarray: ...

    @abstractmethod
    def _update(self, arm, reward, context, mask) -> None: ...

    def _fair(self, scores) -> np.ndarray:
        from ..fairpolicy import fair_policy

        return fair_policy(self.merit, self.merit.clip(scores))


class FixedPolicy(BanditAlgorithm):
    """Deploys the same policy every round and ignores feedback."""

    name = "fixed"

    def __init__(self, n_arms, *, policy, **kw):
        super().__init__(n_arms, **kw)
        policy = np.asarray(policy, float)
        if policy.shape != (n_arms,) or np.any(policy < 0) or not np.isclose(policy.sum(), 1.0):
            raise ValueError(f"policy must be a probability vector over {n_arms} arms")
        self.policy = policy

    def _check_contexts(self, contexts):
        return contexts

    def _select(self, contexts):
        return np.broadcast_to(self.policy, self.batch + (self.n_arms,)).copy()

    def _update(self, arm, reward, context, mask):
        pass
