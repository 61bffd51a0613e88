"""Merit-proportional fair policies and fairness / reward regret accounting.

All functions act on the last axis, so leading axes index replications.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .merit import MeritFunction


def fair_policy(merit: MeritFunction, theta) -> np.ndarray:
    """Policy giving each arm exposure proportional to ``merit(theta_a)``.

    Normalised in log space, so steep exponential merits cannot overflow.
    """
    logits = merit.log_eval(theta)
    logits = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def _check_same_shape(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"policy dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def fairness_regret_step(policy, optimal) -> np.ndarray:
    """l1 distance between the deployed and the optimal fair policy."""
    policy, optimal = np.asarray(policy, float), np.asarray(optimal, float)
    _check_same_shape(policy, optimal)
    return np.abs(optimal - policy).sum(axis=-1)


def reward_regret_step(policy, optimal, means) -> np.ndarray:
    """Expected-reward gap of ``policy`` relative to ``optimal``; can be negative."""
    policy, optimal, means = (np.asarray(v, float) for v in (policy, optimal, means))
    _check_same_shape(policy, optimal)
    _check_same_shape(policy, means)
    return ((optimal - policy) * means).sum(axis=-1)


def is_policy(p, atol: float = 1e-9) -> bool:
    p = np.asarray(p, float)
    return bool(np.all(p >= -atol) and np.all(p <= 1 + atol) and np.allclose(p.sum(axis=-1), 1.0, atol=atol))


@dataclass
class RegretTrace:
    """Cumulative regrets and exposure of one run, or of a lockstep batch.

    With a batch shape ``(R,)`` every field carries a leading replication
    axis, and ``record`` accepts a mask selecting the replications whose
    round actually happened (replay matching).
    """

    round: np.ndarray
    cum_fairness_regret: np.ndarray
    cum_reward_regret: np.ndarray
    exposure_counts: np.ndarray
    cum_policy_mass: np.ndarray
    cum_optimal_mass: np.ndarray

    @classmethod
    def zeros(cls, n_arms: int, batch: tuple[int, ...] = ()) -> "RegretTrace":
        return cls(
            round=np.zeros(batch, dtype=np.int64),
            cum_fairness_regret=np.zeros(batch),
            cum_reward_regret=np.zeros(batch),
            exposure_counts=np.zeros(batch + (n_arms,), dtype=np.int64),
            cum_policy_mass=np.zeros(batch + (n_arms,)),
            cum_optimal_mass=np.zeros(batch + (n_arms,)),
        )

    @property
    def n_arms(self) -> int:
        return self.cum_policy_mass.shape[-1]

    def record(self, policy, optimal, means, arm, mask=None) -> None:
        policy, optimal = np.asarray(policy, float), np.asarray(optimal, float)
        _check_same_shape(policy, optimal)
        diff = optimal - policy
        fr = np.abs(diff).sum(axis=-1)
        rr = (diff * means).sum(axis=-1)
        arm = np.asarray(arm)
        idx = np.arange(arm.size) * self.n_arms + arm.ravel()
        counts = self.exposure_counts.reshape(-1)
        if mask is None:
            self.round += 1
            self.cum_fairness_regret += fr
            self.cum_reward_regret += rr
            self.cum_policy_mass += policy
            self.cum_optimal_mass += optimal
            counts[idx] += 1
            return
        mask = np.asarray(mask, bool)
        m = mask[..., None]
        self.round += mask
        self.cum_fairness_regret += np.where(mask, fr, 0.0)
        self.cum_reward_regret += np.where(mask, rr, 0.0)
        self.cum_policy_mass += np.where(m, policy, 0.0)
        self.cum_optimal_mass += np.where(m, optimal, 0.0)
        counts[idx] += np.broadcast_to(mask, arm.shape).ravel()


def average_exposure(trace: RegretTrace, realized: bool = False) -> np.ndarray:
    """Average exposure per arm over the rounds recorded in ``trace``.

    Exposure is the policy mass by default; ``realized=True`` uses pull counts.
    """
    rounds = np.asarray(trace.round)
    if np.any(rounds == 0):
        raise ValueError("average exposure is undefined before the first round")
    total = trace.exposure_counts if realized else trace.cum_policy_mass
    return total / rounds[..., None]


def average_optimal_exposure(trace: RegretTrace) -> np.ndarray:
    rounds = np.asarray(trace.round)
    if np.any(rounds == 0):
        raise ValueError("average exposure is undefined before the first round")
    return trace.cum_optimal_mass / rounds[..., None]
