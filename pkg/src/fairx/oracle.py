"""Reference optimal fair policy used to measure regret."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fairpolicy import fair_policy
from .merit import MeritFunction

LS_RIDGE = 1e-8
MODES = ("known", "empirical_means", "least_squares")


def solve_normal_equations(xtx, xty, ridge: float = LS_RIDGE) -> np.ndarray:
    """Least-squares parameters from ``X^T X`` and ``X^T y``.

    Raises ``numpy.linalg.LinAlgError`` on a rank-deficient design when
    ``ridge`` is zero.
    """
    xtx = np.asarray(xtx, float)
    gram = xtx + ridge * np.eye(xtx.shape[0])
    if ridge == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise np.linalg.LinAlgError("rank-deficient design; use a conditioning ridge")
    return np.linalg.solve(gram, np.asarray(xty, float))


@dataclass(frozen=True)
class FairOracle:
    """Fitted reference parameters plus the merit defining the fair target.

    ``linear`` oracles hold a d-vector and need per-round contexts; the others
    hold one mean per arm.
    """

    mode: str
    merit: MeritFunction
    fitted_params: np.ndarray
    linear: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown oracle mode {self.mode!r}; expected one of {MODES}")
        params = np.asarray(self.fitted_params, float)
        if params.ndim != 1 or params.size == 0:
            raise ValueError("fitted_params must be a non-empty vector")
        object.__setattr__(self, "fitted_params", params)

    @classmethod
    def known(cls, params, merit: MeritFunction, linear: bool = False) -> "FairOracle":
        return cls("known", merit, np.array(params, float), linear)

    @classmethod
    def empirical_means(cls, labels, merit: MeritFunction) -> "FairOracle":
        """Per-arm means of full-information rewards, ``labels`` of shape (N, K)."""
        labels = np.asarray(labels, float)
        if labels.ndim != 2 or labels.shape[0] == 0:
            raise ValueError("empirical means need a non-empty (N, K) reward matrix")
        return cls("empirical_means", merit, labels.mean(axis=0))

    @classmethod
    def least_squares(cls, X, y, merit: MeritFunction, ridge: float = LS_RIDGE) -> "FairOracle":
        X, y = np.asarray(X, float), np.asarray(y, float)
        if X.ndim != 2 or X.shape[0] == 0 or y.shape != X.shape[:1]:
            raise ValueError("least squares needs a non-empty (n, d) design and n targets")
        return cls.from_gram(X.T @ X, X.T @ y, merit, ridge)

    @classmethod
    def from_gram(cls, xtx, xty, merit: MeritFunction, ridge: float = LS_RIDGE) -> "FairOracle":
        return cls("least_squares", merit, solve_normal_equations(xtx, xty, ridge), True)

    @property
    def n_params(self) -> int:
        return self.fitted_params.size

    def expected_rewards(self, contexts=None) -> np.ndarray:
        if not self.linear:
            if contexts is not None:
                raise ValueError("multi-armed oracle takes no contexts")
            return self.fitted_params
        if contexts is None:
            raise ValueError("linear oracle needs the round's contexts")
        contexts = np.asarray(contexts, float)
        if contexts.shape[-1] != self.n_params:
            raise ValueError(f"context dimension {contexts.shape[-1]} != {self.n_params}")
        return contexts @ self.fitted_params

    def optimal_policy(self, contexts=None) -> np.ndarray:
        """Fair policy of the fitted means, or of this round's fitted dot products."""
        return fair_policy(self.merit, self.merit.clip(self.expected_rewards(contexts)))
