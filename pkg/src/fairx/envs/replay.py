"""Offline evaluation on uniformly logged bandit feedback.

Log files start with a header ``#fairx-replay K=<arms> d=<dim> uniform=<0|1>``
followed by one whitespace-separated event per line::

    timestamp  logged_arm  reward  k  d  ctx[0] ... ctx[k*d - 1]

``d=0`` means the log carries no contexts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..rng import Rng, sample_arms
from .base import Environment

HEADER = "#fairx-replay"
SECONDS_PER_DAY = 86400


class ReplayFormatError(ValueError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class ReplayExhausted(IndexError):
    pass


@dataclass
class ReplayLog:
    """Logged events: arms (N,), rewards (N,), contexts (N, K, d) or ``None``."""

    arms: np.ndarray
    rewards: np.ndarray
    n_arms: int
    contexts: np.ndarray | None = None
    timestamps: np.ndarray | None = None
    uniform: bool = True

    def __post_init__(self):
        self.arms = np.asarray(self.arms, np.int64)
        self.rewards = np.asarray(self.rewards, float)
        if self.arms.shape != self.rewards.shape or self.arms.ndim != 1:
            raise ValueError("arms and rewards must be aligned vectors")
        if np.any((self.arms < 0) | (self.arms >= self.n_arms)):
            raise ValueError(f"logged arm outside [0, {self.n_arms})")
        if self.contexts is not None:
            self.contexts = np.asarray(self.contexts, float)
            if self.contexts.shape[:2] != (len(self), self.n_arms) or self.contexts.ndim != 3:
                raise ValueError("contexts must have shape (N, K, d)")
        if self.timestamps is None:
            self.timestamps = np.arange(len(self), dtype=np.int64)
        self.timestamps = np.asarray(self.timestamps, np.int64)

    def __len__(self) -> int:
        return self.arms.size

    @property
    def dim(self) -> int:
        return 0 if self.contexts is None else self.contexts.shape[2]

    def subset(self, rows) -> "ReplayLog":
        ctx = None if self.contexts is None else self.contexts[rows]
        return ReplayLog(self.arms[rows], self.rewards[rows], self.n_arms, ctx,
                         self.timestamps[rows], self.uniform)

    def split_by_day(self, validation_fraction: float = 0.2) -> tuple["ReplayLog", "ReplayLog"]:
        """Earliest days form the validation log, the rest the test log.

        A single-day log is split chronologically by event count instead.
        """
        days = self.timestamps // SECONDS_PER_DAY
        uniq = np.unique(days)
        if uniq.size >= 2:
            n_val = min(max(1, int(round(validation_fraction * uniq.size))), uniq.size - 1)
            val = days < uniq[n_val]
        else:
            val = np.arange(len(self)) < int(round(validation_fraction * len(self)))
        return self.subset(val), self.subset(~val)


def _parse_header(line: str) -> tuple[int, int, bool]:
    tokens = line.split()
    if not tokens or tokens[0] != HEADER:
        raise ReplayFormatError(1, f"header must start with {HEADER!r}")
    fields = {}
    for tok in tokens[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ReplayFormatError(1, f"bad header field {tok!r}")
        fields[key] = val
    try:
        n_arms, dim, uniform = int(fields["K"]), int(fields["d"]), fields["uniform"]
    except (KeyError, ValueError):
        raise ReplayFormatError(1, "header needs integer K, d and a uniform flag") from None
    if n_arms < 1 or dim < 0:
        raise ReplayFormatError(1, "header needs K >= 1 and d >= 0")
    if uniform not in ("0", "1", "true", "false"):
        raise ReplayFormatError(1, f"bad uniform flag {uniform!r}")
    return n_arms, dim, uniform in ("1", "true")


def parse_replay_log(lines: Iterable[str]) -> ReplayLog:
    """Parse a log, raising :class:`ReplayFormatError` at the first bad line."""
    it = iter(lines)
    try:
        n_arms, dim, uniform = _parse_header(next(it))
    except StopIteration:
        raise ReplayFormatError(1, "empty log") from None
    ts, arms, rewards, ctxs = [], [], [], []
    for no, raw in enumerate(it, 2):
        tokens = raw.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) < 5:
            raise ReplayFormatError(no, "expected timestamp, arm, reward, k, d")
        try:
            t, arm, k, d = int(tokens[0]), int(tokens[1]), int(tokens[3]), int(tokens[4])
            reward = float(tokens[2])
            ctx = [float(v) for v in tokens[5:]]
        except ValueError:
            raise ReplayFormatError(no, "non-numeric field") from None
        if k != n_arms or d != dim:
            raise ReplayFormatError(no, f"event has k={k}, d={d} but header says K={n_arms}, d={dim}")
        if not 0 <= arm < n_arms:
            raise ReplayFormatError(no, f"logged arm {arm} outside [0, {n_arms})")
        if len(ctx) != k * d:
            raise ReplayFormatError(no, f"expected {k * d} context values, found {len(ctx)}")
        ts.append(t)
        arms.append(arm)
        rewards.append(reward)
        ctxs.append(ctx)
    if not arms:
        raise ReplayFormatError(1, "log has no events")
    contexts = np.asarray(ctxs, float).reshape(len(arms), n_arms, dim) if dim else None
    return ReplayLog(np.asarray(arms), np.asarray(rewards), n_arms, contexts, np.asarray(ts), uniform)


def read_replay_log(path: str | os.PathLike) -> ReplayLog:
    with open(path) as fh:
        return parse_replay_log(fh)


def validate_replay_log(path: str | os.PathLike) -> ReplayLog:
    """Parse ``path`` and additionally require the uniform-logging flag."""
    log = read_replay_log(path)
    if not log.uniform:
        raise ReplayFormatError(1, "log is not flagged as uniformly logged; replay would be biased")
    return log


def write_replay_log(log: ReplayLog, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"{HEADER} K={log.n_arms} d={log.dim} uniform={int(log.uniform)}\n")
        for i in range(len(log)):
            ctx = "" if log.contexts is None else "\t" + " ".join(map(repr, log.contexts[i].ravel().tolist()))
            fh.write(f"{log.timestamps[i]}\t{log.arms[i]}\t{float(log.rewards[i])!r}\t{log.n_arms}\t{log.dim}{ctx}\n")


@dataclass
class ReplayOutcome:
    matched: np.ndarray
    reward: np.ndarray
    contexts: np.ndarray | None


def replay_step(log: ReplayLog, cursor, policy, rng: Rng) -> ReplayOutcome:
    """Sample an arm from ``policy`` and compare it with the logged event at ``cursor``.

    Unmatched events carry reward 0 and must not be used for updates.
    """
    if not log.uniform:
        raise ValueError("replay requires a uniformly logged log")
    cursor = np.asarray(cursor)
    if np.any((cursor < 0) | (cursor >= len(log))):
        raise ReplayExhausted("cursor beyond the end of the log")
    arm = sample_arms(np.asarray(policy, float), rng)
    matched = arm == log.arms[cursor]
    ctx = None if log.contexts is None else log.contexts[cursor]
    return ReplayOutcome(matched, np.where(matched, log.rewards[cursor], 0.0), ctx)


class ReplayEnv(Environment):
    """Per-replication cursors over one uniform log.

    ``step`` accepts only events where the sampled arm equals the logged one;
    the cursor advances either way. Exhausted replications are never accepted
    again.
    """

    def __init__(self, log: ReplayLog, name: str = "replay"):
        if not log.uniform:
            raise ValueError("replay requires a uniformly logged log")
        self.log = log
        self.name = name

    @property
    def n_arms(self) -> int:
        return self.log.n_arms

    @property
    def dim(self) -> int | None:
        return self.log.dim or None

    def reset(self, rng, n_runs=None):
        super().reset(rng, n_runs)
        self.cursor = np.zeros(self.batch, np.int64)

    def _clamped(self) -> np.ndarray:
        return np.minimum(self.cursor, len(self.log) - 1)

    def observe(self):
        return None if self.log.contexts is None else self.log.contexts[self._clamped()]

    def step(self, arm):
        live = ~self.exhausted()
        pos = self._clamped()
        matched = live & (np.asarray(arm) == self.log.arms[pos])
        self.cursor = self.cursor + live
        return np.where(matched, self.log.rewards[pos], 0.0), matched

    def exhausted(self) -> np.ndarray:
        return self.cursor >= len(self.log)

    def describe(self) -> str:
        return self.name


def synthetic_uniform_log(ctr, n_events: int, rng: np.random.Generator,
                          contexts_dim: int = 0) -> ReplayLog:
    """Uniformly logged Bernoulli clicks with planted per-arm CTRs."""
    ctr = np.asarray(ctr, float)
    arms = rng.integers(ctr.size, size=n_events)
    rewards = (rng.random(n_events) < ctr[arms]).astype(float)
    ctx = rng.standard_normal((n_events, ctr.size, contexts_dim)) if contexts_dim else None
    return ReplayLog(arms, rewards, ctr.size, ctx, np.arange(n_events) * 60)
