"""Multi-armed bandit policies: fair UCB / TS / epsilon-greedy and the
conventional UCB and TS baselines."""

from __future__ import annotations

import numpy as np

from ..estimators import ArmStats, PerArmGaussianPosterior
from ..optim import BoxRegion, PgdConfig, pgd_maximize
from .base import BanditAlgorithm, point_mass


class _Empirical(BanditAlgorithm):
    def __init__(self, n_arms, *, alpha: float = 1.0, **kw):
        super().__init__(n_arms, **kw)
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.alpha = float(alpha)
        self.stats = ArmStats(n_arms, self.batch)

    def _widths(self) -> np.ndarray:
        counts = self.stats.counts
        return np.where(counts > 0, self.alpha / np.sqrt(np.maximum(counts, 1)), np.inf)

    def _initialising(self):
        """Replications with an unpulled arm, and that arm (lowest index)."""
        unpulled = self.stats.counts == 0
        return unpulled.any(axis=-1), np.argmax(unpulled, axis=-1)

    def _update(self, arm, reward, context, mask):
        self.stats.update(arm, reward, mask)


class UCB(_Empirical):
    """Pull the arm with the largest ``mean + alpha / sqrt(count)``."""

    name = "ucb"

    def _select(self, contexts):
        return point_mass(np.argmax(self.stats.means + self._widths(), axis=-1), self.n_arms)


class FairXUCB(_Empirical):
    """Optimistic fair policy over a box confidence region.

    The first rounds pull each arm once; afterwards the region is
    ``mean_a +- alpha / sqrt(N_a)`` intersected with the merit's domain, the
    optimistic parameter is found by projected gradient ascent, and the
    deployed policy is the fair policy of that parameter.
    """

    name = "fairx_ucb"
    fair = True

    def __init__(self, n_arms, *, pgd: PgdConfig = PgdConfig(), compiled: bool = True, **kw):
        super().__init__(n_arms, **kw)
        self.pgd = pgd
        self.compiled = compiled

    def optimistic_parameter(self) -> np.ndarray:
        if self.compiled:
            return self._optimistic_compiled()[0]
        center = self.merit.clip(self.stats.means)
        box = BoxRegion.around(center, self._widths()).intersect(*self.merit.eval_domain)
        return pgd_maximize(self.merit, box, init=center, cfg=self.pgd, compiled=False)

    def _optimistic_compiled(self) -> tuple[np.ndarray, np.ndarray]:
        from .._kernels import KIND_CODES, optimistic_box

        k = self.n_arms
        dlo, dhi = self.merit.eval_domain
        best, policy, ok = optimistic_box(
            KIND_CODES[self.merit.kind], self.merit.param, dlo, dhi,
            self.stats.sums.reshape(-1, k), self.stats.counts.reshape(-1, k), self.alpha,
            float(self.pgd.step_size), int(self.pgd.num_steps), bool(self.pgd.vertex_start),
        )
        if not ok:
            raise FloatingPointError("non-finite gradient in optimistic objective")
        shape = self.stats.sums.shape
        return best.reshape(shape), policy.reshape(shape)

    def _select(self, contexts):
        if self.compiled:
            return self._optimistic_compiled()[1]
        policy = self._fair(self.optimistic_parameter())
        init, arm = self._initialising()
        if np.any(init):
            policy = np.where(init[..., None], point_mass(arm, self.n_arms), policy)
        return policy


class FairXEG(_Empirical):
    """Mixture ``(1 - eps) * fair_policy(means) + eps * uniform``."""

    name = "fairx_eg"
    fair = True

    def __init__(self, n_arms, *, epsilon: float = 0.0, **kw):
        super().__init__(n_arms, **kw)
        if not 0 <= epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)

    def _select(self, contexts):
        policy = self._fair(self.stats.means)
        init, arm = self._initialising()
        if np.any(init):
            policy = np.where(init[..., None], point_mass(arm, self.n_arms), policy)
        return (1.0 - self.epsilon) * policy + self.epsilon / self.n_arms


class _Posterior(BanditAlgorithm):
    def __init__(self, n_arms, *, prior_mean: float = 0.0, prior_std: float = 1.0,
                 reward_std: float = 1.0, **kw):
        super().__init__(n_arms, **kw)
        if prior_std <= 0 or reward_std <= 0:
            raise ValueError("prior_std and reward_std must be positive")
        self.reward_var = float(reward_std) ** 2
        self.posterior = PerArmGaussianPosterior(n_arms, prior_mean, float(prior_std) ** 2, self.batch)

    def _update(self, arm, reward, context, mask):
        self.posterior.update(arm, reward, self.reward_var, mask)


class ThompsonSampling(_Posterior):
    """Pull the argmax of a posterior sample."""

    name = "ts"

    def _select(self, contexts):
        return point_mass(np.argmax(self.posterior.sample(self.rng), axis=-1), self.n_arms)


class FairXTS(_Posterior):
    """Deploy the fair policy of a posterior sample."""

    name = "fairx_ts"
    fair = True

    def _select(self, contexts):
        return self._fair(self.posterior.sample(self.rng))
