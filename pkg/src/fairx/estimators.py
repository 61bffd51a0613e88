"""Sufficient statistics shared by the bandit algorithms.

Each estimator may carry leading replication axes; updates take an optional
boolean ``mask`` over those axes so that only some replications consume an
observation.
"""

from __future__ import annotations

import numpy as np

from .rng import Rng


def _mask(mask, shape) -> np.ndarray:
    return np.ones(shape, bool) if mask is None else np.broadcast_to(np.asarray(mask, bool), shape)


def _cho_solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.linalg.solve(chol, b[..., None])
    return np.linalg.solve(np.swapaxes(chol, -1, -2), y)[..., 0]


def _cholesky(mat: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"{what} is not symmetric positive definite: {exc}") from None


class ArmStats:
    """Pull counts and reward sums per arm."""

    def __init__(self, n_arms: int, batch: tuple[int, ...] = ()):
        self.counts = np.zeros(batch + (n_arms,), dtype=np.int64)
        self.sums = np.zeros(batch + (n_arms,))

    @property
    def n_arms(self) -> int:
        return self.counts.shape[-1]

    @property
    def means(self) -> np.ndarray:
        """Empirical means; 0 for arms that were never pulled."""
        return np.divide(self.sums, self.counts, out=np.zeros_like(self.sums), where=self.counts > 0)

    def update(self, arm, reward, mask=None) -> "ArmStats":
        arm = np.asarray(arm)
        if np.any((arm < 0) | (arm >= self.n_arms)):
            raise IndexError(f"arm index out of range for {self.n_arms} arms")
        idx = np.arange(arm.size) * self.n_arms + arm.ravel()
        reward = np.broadcast_to(np.asarray(reward, float), arm.shape).ravel()
        counts, sums = self.counts.reshape(-1), self.sums.reshape(-1)
        if mask is None:
            counts[idx] += 1
            sums[idx] += reward
        else:
            take = np.broadcast_to(np.asarray(mask, bool), arm.shape).ravel()
            counts[idx] += take
            sums[idx] += np.where(take, reward, 0.0)
        return self


class RidgeState:
    """Regularised Gram matrix ``V = lam I + sum x x^T`` and ``B = sum x r``."""

    def __init__(self, dim: int, lam: float = 1.0, batch: tuple[int, ...] = ()):
        if lam <= 0:
            raise ValueError("ridge regularisation must be positive")
        self.lam = float(lam)
        self.V = np.broadcast_to(lam * np.eye(dim), batch + (dim, dim)).copy()
        self.B = np.zeros(batch + (dim,))

    @property
    def dim(self) -> int:
        return self.B.shape[-1]

    def update(self, x, r, mask=None) -> "RidgeState":
        x = np.asarray(x, float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"context dimension {x.shape[-1]} != ridge dimension {self.dim}")
        m = _mask(mask, x.shape[:-1]).astype(float)
        xm = x * m[..., None]
        self.V += xm[..., :, None] * x[..., None, :]
        self.V = 0.5 * (self.V + np.swapaxes(self.V, -1, -2))
        self.B += xm * np.asarray(r, float)[..., None]
        return self

    def cholesky(self) -> np.ndarray:
        return _cholesky(self.V, "ridge Gram matrix")

    def solve(self) -> np.ndarray:
        """Ridge estimate ``V^{-1} B`` via a Cholesky factorisation."""
        return _cho_solve(self.cholesky(), self.B)


def ridge_batch(X, y, lam: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """``(V, B)`` built from scratch; the reference for incremental updates."""
    X, y = np.asarray(X, float), np.asarray(y, float)
    return lam * np.eye(X.shape[1]) + X.T @ X, X.T @ y


class PerArmGaussianPosterior:
    """Independent normal posteriors over each arm's mean reward."""

    def __init__(self, n_arms: int, prior_mean: float = 0.0, prior_var: float = 1.0,
                 batch: tuple[int, ...] = ()):
        if prior_var <= 0:
            raise ValueError("prior variance must be positive")
        self.mean = np.full(batch + (n_arms,), float(prior_mean))
        self.var = np.full(batch + (n_arms,), float(prior_var))

    @property
    def n_arms(self) -> int:
        return self.mean.shape[-1]

    def update(self, arm, reward, reward_var: float, mask=None) -> "PerArmGaussianPosterior":
        """Normal-normal conjugate update of the chosen arms."""
        if reward_var <= 0:
            raise ValueError("reward variance must be positive")
        arm = np.asarray(arm)
        if np.any((arm < 0) | (arm >= self.n_arms)):
            raise IndexError(f"arm index out of range for {self.n_arms} arms")
        idx = np.arange(arm.size) * self.n_arms + arm.ravel()
        reward = np.broadcast_to(np.asarray(reward, float), arm.shape).ravel()
        if mask is not None:
            take = np.broadcast_to(np.asarray(mask, bool), arm.shape).ravel()
            idx, reward = idx[take], reward[take]
        mean, var = self.mean.reshape(-1), self.var.reshape(-1)
        prec = 1.0 / var[idx]
        new_prec = prec + 1.0 / reward_var
        mean[idx] = (mean[idx] * prec + reward / reward_var) / new_prec
        var[idx] = 1.0 / new_prec
        return self

    def sample(self, rng: Rng) -> np.ndarray:
        return self.mean + np.sqrt(self.var) * rng.standard_normal((self.n_arms,))


class MultivariateGaussianPosterior:
    """Gaussian posterior over a linear parameter, kept in natural form.

    ``precision = I / prior_var + sum x x^T / reward_var`` and
    ``shift = precision_0 mean_0 + sum x r / reward_var``; the mean is
    ``precision^{-1} shift``.
    """

    def __init__(self, dim: int, prior_var: float = 1.0, reward_var: float = 1.0,
                 prior_mean=None, batch: tuple[int, ...] = ()):
        if prior_var <= 0 or reward_var <= 0:
            raise ValueError("variances must be positive")
        self.reward_var = float(reward_var)
        prior_prec = np.eye(dim) / prior_var
        m0 = np.zeros(dim) if prior_mean is None else np.asarray(prior_mean, float)
        self.precision = np.broadcast_to(prior_prec, batch + (dim, dim)).copy()
        self.shift = np.broadcast_to(prior_prec @ m0, batch + (dim,)).copy()
        self._chol = None

    @property
    def dim(self) -> int:
        return self.shift.shape[-1]

    def update(self, x, r, mask=None) -> "MultivariateGaussianPosterior":
        x = np.asarray(x, float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"context dimension {x.shape[-1]} != posterior dimension {self.dim}")
        m = _mask(mask, x.shape[:-1]).astype(float)
        xm = x * (m / self.reward_var)[..., None]
        self.precision += xm[..., :, None] * x[..., None, :]
        self.precision = 0.5 * (self.precision + np.swapaxes(self.precision, -1, -2))
        self.shift += xm * np.asarray(r, float)[..., None]
        self._chol = None
        return self

    def _factor(self) -> np.ndarray:
        if self._chol is None:
            self._chol = _cholesky(self.precision, "posterior precision")
        return self._chol

    @property
    def mean(self) -> np.ndarray:
        return _cho_solve(self._factor(), self.shift)

    def sample(self, rng: Rng) -> np.ndarray:
        """``mean + L^{-T} z`` with ``L L^T = precision``, so the covariance is ``precision^{-1}``."""
        chol = self._factor()
        z = rng.standard_normal((self.dim,))
        noise = np.linalg.solve(np.swapaxes(chol, -1, -2), z[..., None])[..., 0]
        return self.mean + noise
