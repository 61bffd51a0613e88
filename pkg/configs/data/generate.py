"""Regenerate the small sample datasets shipped next to the presets.

    python3 configs/data/generate.py

The multi-label sample mimics the shape of the yeast dataset (103 dense
features, 14 labels) with labels drawn from a planted logistic model; the
replay sample is a uniformly logged click log with planted CTRs spanning
three days.
"""

from pathlib import Path

import numpy as np

from fairx.envs import ReplayLog, write_replay_log

HERE = Path(__file__).parent


def multilabel_sample(path: Path, n_rows: int = 400, n_features: int = 103, n_labels: int = 14) -> None:
    rng = np.random.default_rng(7)
    features = rng.standard_normal((n_rows, n_features)) * 0.1
    weights = rng.standard_normal((n_features, n_labels))
    bias = rng.uniform(-2.0, 0.5, n_labels)
    prob = 1.0 / (1.0 + np.exp(-(features @ weights + bias)))
    labels = rng.random((n_rows, n_labels)) < prob
    with open(path, "w") as fh:
        for x, y in zip(features, labels):
            lab = ",".join(str(i) for i in np.flatnonzero(y))
            feats = " ".join(f"{i}:{v:.6f}" for i, v in enumerate(x))
            fh.write(f"{lab} {feats}\n")


def replay_sample(path: Path, n_events: int = 6000, n_arms: int = 5, dim: int = 3) -> None:
    rng = np.random.default_rng(11)
    theta = np.array([0.3, -0.2, 0.1])
    contexts = rng.uniform(0.0, 1.0, (n_events, n_arms, dim)) / np.sqrt(dim)
    arms = rng.integers(n_arms, size=n_events)
    ctr = np.clip(0.05 + contexts[np.arange(n_events), arms] @ theta, 0.0, 1.0)
    rewards = (rng.random(n_events) < ctr).astype(float)
    timestamps = np.sort(rng.integers(0, 3 * 86400, n_events))
    write_replay_log(ReplayLog(arms, rewards, n_arms, np.round(contexts, 6), timestamps), path)


if __name__ == "__main__":
    multilabel_sample(HERE / "multilabel_sample.txt")
    replay_sample(HERE / "replay_sample.log")
