"""Linear bandit policies: fair LinUCB / LinTS / epsilon-greedy and the
conventional LinUCB and LinTS baselines."""

from __future__ import annotations

import numpy as np

from ..estimators import MultivariateGaussianPosterior, RidgeState
from ..optim import EllipsoidRegion, PgdConfig, beta_schedule, pgd_maximize
from .base import BanditAlgorithm, point_mass


def _scores(contexts, theta):
    return np.einsum("...kd,...d->...k", contexts, theta)


class _LinearBase(BanditAlgorithm):
    linear = True

    def __init__(self, n_arms, dim: int, **kw):
        if dim < 1:
            raise ValueError("context dimension must be positive")
        self.dim = dim
        super().__init__(n_arms, **kw)
        self.t = np.ones(self.batch, dtype=np.int64)

    def _update(self, arm, reward, context, mask):
        context = np.asarray(context, float)
        if context.shape[-1] != self.dim:
            raise ValueError(f"context dimension {context.shape[-1]} != {self.dim}")
        self._consume(context, reward, mask)
        self.t = self.t + (1 if mask is None else np.asarray(mask, np.int64))

    def _consume(self, context, reward, mask): ...


class _Ridge(_LinearBase):
    """Ridge state; ``beta`` is a fixed radius, or ``None`` for the schedule."""

    def __init__(self, n_arms, dim, *, lam: float = 1.0, beta: float | None = 1.0,
                 W: float = 1.0, delta: float = 0.1, **kw):
        super().__init__(n_arms, dim, **kw)
        self.ridge = RidgeState(dim, lam, self.batch)
        if beta is not None and beta < 0:
            raise ValueError("beta must be non-negative")
        self.beta = beta
        self.W = float(W)
        self.delta = float(delta)

    def radius_sq(self) -> np.ndarray:
        if self.beta is not None:
            return np.full(self.batch, float(self.beta))
        return np.vectorize(lambda t: beta_schedule(int(t), self.dim, self.W, self.delta))(self.t)

    def _consume(self, context, reward, mask):
        self.ridge.update(context, reward, mask)


class LinUCB(_Ridge):
    """Pull the argmax of ``theta_hat . x + sqrt(beta) ||x||_{V^-1}``."""

    name = "linucb"

    def _select(self, contexts):
        chol = self.ridge.cholesky()
        theta_hat = self.ridge.solve()
        half = np.linalg.solve(chol, np.swapaxes(contexts, -1, -2))
        bonus = np.sqrt((half * half).sum(axis=-2))
        ucb = _scores(contexts, theta_hat) + np.sqrt(self.radius_sq())[..., None] * bonus
        return point_mass(np.argmax(ucb, axis=-1), self.n_arms)


class FairXLinUCB(_Ridge):
    """Optimistic fair policy over the ellipsoid ``||theta - theta_hat||_V <= sqrt(beta)``."""

    name = "fairx_linucb"
    fair = True

    def __init__(self, n_arms, dim, *, pgd: PgdConfig = PgdConfig(), **kw):
        super().__init__(n_arms, dim, **kw)
        self.pgd = pgd

    def optimistic_parameter(self, contexts) -> np.ndarray:
        theta_hat = self.ridge.solve()
        region = EllipsoidRegion(theta_hat, self.ridge.V, self.radius_sq())
        return pgd_maximize(self.merit, region, init=theta_hat, cfg=self.pgd, contexts=contexts)

    def _select(self, contexts):
        return self._fair(_scores(contexts, self.optimistic_parameter(contexts)))


class FairXLinEG(_Ridge):
    """Mixture of uniform exploration and the fair policy of the ridge estimate."""

    name = "fairx_lineg"
    fair = True

    def __init__(self, n_arms, dim, *, epsilon: float = 0.0, **kw):
        super().__init__(n_arms, dim, **kw)
        if not 0 <= epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)

    def _select(self, contexts):
        policy = self._fair(_scores(contexts, self.ridge.solve()))
        return (1.0 - self.epsilon) * policy + self.epsilon / self.n_arms


class _LinPosterior(_LinearBase):
    def __init__(self, n_arms, dim, *, prior_std: float = 1.0, reward_std: float = 1.0, **kw):
        super().__init__(n_arms, dim, **kw)
        if prior_std <= 0 or reward_std <= 0:
            raise ValueError("prior_std and reward_std must be positive")
        self.posterior = MultivariateGaussianPosterior(
            dim, float(prior_std) ** 2, float(reward_std) ** 2, batch=self.batch
        )

    def _consume(self, context, reward, mask):
        self.posterior.update(context, reward, mask)


class LinTS(_LinPosterior):
    """Pull the argmax of ``theta . x`` for ``theta`` drawn from the posterior."""

    name = "lints"

    def _select(self, contexts):
        theta = self.posterior.sample(self.rng)
        return point_mass(np.argmax(_scores(contexts, theta), axis=-1), self.n_arms)


class FairXLinTS(_LinPosterior):
    """Fair policy over ``theta . x`` for one ``theta`` drawn from the posterior."""

    name = "fairx_lints"
    fair = True

    def _select(self, contexts):
        return self._fair(_scores(contexts, self.posterior.sample(self.rng)))
