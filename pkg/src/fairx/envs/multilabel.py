"""Multi-label classification datasets turned into bandits.

Each round samples one example; the arms are its candidate labels and the
reward of an arm is that label's bit. In the linear variant every
(example, arm) pair gets a random Fourier feature context built from the
flattened outer product of the example's features with the arm's one-hot
vector.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.spatial.distance import pdist

from ..rng import Rng
from .base import Environment, chosen_context

MODES = ("mab", "linear", "well_specified")
WELL_SPECIFIED_NOISE = 0.1
MEDIAN_SAMPLE = 500


class MultilabelFormatError(ValueError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


def parse_multilabel(lines: Iterable[str], n_features: int | None = None,
                     n_labels: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Parse ``label,label,... feat:val feat:val ...`` rows.

    Returns dense ``features`` of shape (N, F) and 0/1 ``labels`` of shape
    (N, K). Lines that are blank or start with ``#`` are skipped. Indices are
    used as given; ``F`` and ``K`` default to one past the largest index seen.
    """
    rows: list[tuple[list[int], list[tuple[int, float]]]] = []
    for no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        labels: list[int] = []
        if ":" not in tokens[0]:
            try:
                labels = [int(tok) for tok in tokens[0].split(",") if tok]
            except ValueError:
                raise MultilabelFormatError(no, f"bad label list {tokens[0]!r}") from None
            tokens = tokens[1:]
        feats = []
        for tok in tokens:
            key, sep, val = tok.partition(":")
            try:
                feats.append((int(key), float(val)))
            except ValueError:
                raise MultilabelFormatError(no, f"bad feature token {tok!r}") from None
            if not sep:
                raise MultilabelFormatError(no, f"bad feature token {tok!r}")
        if any(i < 0 for i in labels) or any(i < 0 for i, _ in feats):
            raise MultilabelFormatError(no, "negative index")
        if n_labels is not None and any(i >= n_labels for i in labels):
            raise MultilabelFormatError(no, f"label index exceeds label width {n_labels}")
        rows.append((labels, feats))
    if not rows:
        raise ValueError("empty dataset")
    n_f = n_features or 1 + max((i for _, fs in rows for i, _ in fs), default=0)
    n_l = n_labels or 1 + max((i for ls, _ in rows for i in ls), default=0)
    features = np.zeros((len(rows), n_f))
    labels = np.zeros((len(rows), n_l))
    for n, (ls, fs) in enumerate(rows):
        labels[n, ls] = 1.0
        for i, v in fs:
            if i >= n_f:
                raise ValueError(f"feature index {i} exceeds feature width {n_f}")
            features[n, i] = v
    return features, labels


def load_multilabel(path: str | os.PathLike, **kw) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        return parse_multilabel(fh, **kw)


def split_rows(n: int, validation_fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Seeded permutation split into (validation, test) row indices."""
    if not 0 <= validation_fraction <= 1:
        raise ValueError("validation_fraction must lie in [0, 1]")
    perm = np.random.default_rng(seed).permutation(n)
    cut = int(round(validation_fraction * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def _raw_vectors(features: np.ndarray, arms: np.ndarray, n_arms: int) -> np.ndarray:
    raw = np.zeros((len(arms), features.shape[1], n_arms))
    raw[np.arange(len(arms)), :, arms] = features
    return raw.reshape(len(arms), -1)


def median_bandwidth(features: np.ndarray, n_arms: int, rng: np.random.Generator,
                     n_samples: int = MEDIAN_SAMPLE) -> float:
    """Median pairwise distance of raw (example x one-hot arm) vectors on a subsample."""
    n = min(n_samples, features.shape[0] * n_arms)
    flat = rng.choice(features.shape[0] * n_arms, size=n, replace=False)
    raw = _raw_vectors(features[flat // n_arms], flat % n_arms, n_arms)
    med = float(np.median(pdist(raw))) if n > 1 else 0.0
    return med if med > 0 else 1.0


@dataclass
class RandomFourierFeatures:
    """``x = scale * sqrt(2/D) * cos(omega . raw + offset)`` per (example, arm).

    ``omega`` has shape (D, F*K) with raw index ``f*K + a``. ``scale`` is a
    single global factor chosen so the largest context on the dataset has
    norm one.
    """

    omega: np.ndarray
    offset: np.ndarray
    n_arms: int
    scale: float = 1.0

    @classmethod
    def draw(cls, n_features: int, n_arms: int, rff_dim: int, sigma: float,
             rng: np.random.Generator) -> "RandomFourierFeatures":
        if rff_dim < 1:
            raise ValueError("rff_dim must be positive")
        if sigma <= 0:
            raise ValueError("rff bandwidth must be positive")
        omega = rng.standard_normal((rff_dim, n_features * n_arms)) / sigma
        offset = rng.uniform(0.0, 2.0 * np.pi, rff_dim)
        return cls(omega, offset, n_arms)

    @property
    def dim(self) -> int:
        return self.offset.size

    def unscaled(self, features) -> np.ndarray:
        """Contexts of shape (..., K, D) before the global rescaling."""
        features = np.asarray(features, float)
        w = self.omega.reshape(self.dim, -1, self.n_arms)
        proj = np.einsum("dfk,...f->...kd", w, features) + self.offset
        return np.sqrt(2.0 / self.dim) * np.cos(proj)

    def __call__(self, features) -> np.ndarray:
        return self.scale * self.unscaled(features)

    def fit_scale(self, features: np.ndarray, chunk: int = 512) -> "RandomFourierFeatures":
        peak = max(np.linalg.norm(self.unscaled(features[i:i + chunk]), axis=-1).max()
                   for i in range(0, len(features), chunk))
        self.scale = 1.0 / peak if peak > 0 else 1.0
        return self


class MultilabelEnv(Environment):
    """Bandit over a multi-label dataset.

    ``mode`` is ``"mab"`` (arms are labels, no contexts), ``"linear"`` (RFF
    contexts, reward is the label bit) or ``"well_specified"`` (RFF contexts,
    reward is ``theta_ls . x + N(0, 0.1^2)`` with ``theta_ls`` the
    full-information least-squares fit on this dataset).
    """

    def __init__(self, features, labels, mode: str = "mab", rff: RandomFourierFeatures | None = None,
                 theta_ls: np.ndarray | None = None, name: str = "multilabel"):
        features = np.asarray(features, float)
        labels = np.asarray(labels, float)
        if features.shape[0] == 0:
            raise ValueError("empty dataset")
        if labels.ndim != 2 or labels.shape[0] != features.shape[0]:
            raise ValueError("labels must be an (N, K) matrix aligned with features")
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        if mode != "mab" and rff is None:
            raise ValueError(f"mode {mode!r} needs random Fourier features")
        if rff is not None and rff.n_arms != labels.shape[1]:
            raise ValueError(f"label width {labels.shape[1]} != {rff.n_arms} arms of the feature map")
        if rff is not None and rff.omega.shape[1] != features.shape[1] * labels.shape[1]:
            raise ValueError("feature width does not match the feature map")
        self.features, self.labels, self.mode, self.rff, self.name = features, labels, mode, rff, name
        self.theta_ls = theta_ls
        if mode == "well_specified" and theta_ls is None:
            from ..oracle import solve_normal_equations
            self.theta_ls = solve_normal_equations(*self.full_information_gram())

    @property
    def n_arms(self) -> int:
        return self.labels.shape[1]

    @property
    def dim(self) -> int | None:
        return None if self.rff is None else self.rff.dim

    def subset(self, rows) -> "MultilabelEnv":
        return MultilabelEnv(self.features[rows], self.labels[rows], self.mode, self.rff,
                             self.theta_ls, self.name)

    def label_means(self) -> np.ndarray:
        return self.labels.mean(axis=0)

    def contexts_of(self, rows) -> np.ndarray:
        return self.rff(self.features[rows])

    def full_information_design(self, chunk: int = 256) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """(contexts, label bits) for every (example, arm) pair, in chunks."""
        for i in range(0, len(self.features), chunk):
            x = self.rff(self.features[i:i + chunk])
            yield x.reshape(-1, self.dim), self.labels[i:i + chunk].reshape(-1)

    def full_information_gram(self) -> tuple[np.ndarray, np.ndarray]:
        xtx = np.zeros((self.dim, self.dim))
        xty = np.zeros(self.dim)
        for x, y in self.full_information_design():
            xtx += x.T @ x
            xty += x.T @ y
        return xtx, xty

    def reset(self, rng, n_runs=None):
        super().reset(rng, n_runs)
        self._rows = None
        self._contexts = None

    def observe(self):
        self._rows = self._rng.integers(len(self.features), ())
        if self.rff is None:
            return None
        self._contexts = self.contexts_of(self._rows)
        return self._contexts

    def step(self, arm):
        arm = np.asarray(arm)
        if np.any((arm < 0) | (arm >= self.n_arms)):
            raise IndexError(f"arm index out of range for {self.n_arms} arms")
        if self.mode == "well_specified":
            x = chosen_context(self._contexts, arm)
            reward = x @ self.theta_ls + WELL_SPECIFIED_NOISE * self._rng.standard_normal(())
        else:
            reward = self.labels[self._rows, arm]
        return reward, np.ones(self.batch, bool)

    def describe(self) -> str:
        return f"{self.name}-{self.mode}"


def multilabel_to_linear(features, labels, rff_dim: int = 50, rff_sigma: float | None = None,
                         rng: np.random.Generator | None = None, mode: str = "linear") -> MultilabelEnv:
    """Linear bandit over a multi-label dataset with RFF contexts.

    ``rff_sigma=None`` uses the median heuristic on a 500-pair subsample.
    """
    features = np.asarray(features, float)
    labels = np.asarray(labels, float)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("empty dataset")
    if labels.ndim != 2 or labels.shape[0] != features.shape[0]:
        raise ValueError("label width mismatch: labels must be an (N, K) matrix aligned with features")
    rng = np.random.default_rng() if rng is None else rng
    n_arms = labels.shape[1]
    sigma = median_bandwidth(features, n_arms, rng) if rff_sigma is None else rff_sigma
    rff = RandomFourierFeatures.draw(features.shape[1], n_arms, rff_dim, sigma, rng).fit_scale(features)
    return MultilabelEnv(features, labels, mode, rff)
