"""Random streams for single runs and for replications run in lockstep.

Every stochastic routine in the package draws through a small duck-typed
interface: ``random(shape)``, ``standard_normal(shape)`` and
``integers(high, shape)``, where ``shape`` is the per-replication shape.
A plain :class:`numpy.random.Generator` satisfies it for a single run.
:class:`RngStreams` bundles one generator per replication and stacks their
draws along a new leading axis, so a batch of seeds advances together while
each seed still consumes its own independent stream.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

Rng = Union[np.random.Generator, "RngStreams"]

# Child stream indices spawned from each replication's seed sequence.
ENV_STREAM = 0
ALGO_STREAM = 1
SAMPLER_STREAM = 2

# Pre-drawn values per replication and buffer. Block lengths depend only on the
# draw shape, never on the batch size, so refills line up in single and batched runs.
_BUFFER_VALUES = 4096


class RngStreams:
    """One independent generator per replication.

    Draws are served from per-replication blocks of up to ``block`` values,
    one buffer per (distribution, shape), so one call costs a slice rather
    than one generator call per replication. Because every replication
    consumes its own stream in the same order whatever batch it runs in, a
    batched run reproduces the same seeds run alone.
    """

    def __init__(self, generators: Sequence[np.random.Generator], block: int = 1024):
        if len(generators) == 0:
            raise ValueError("RngStreams needs at least one generator")
        self.generators = list(generators)
        self.block = block
        self._buffers: dict[tuple, list] = {}

    def __len__(self) -> int:
        return len(self.generators)

    @classmethod
    def from_seed_sequences(cls, seqs: Sequence[np.random.SeedSequence]) -> "RngStreams":
        return cls([np.random.default_rng(s) for s in seqs])

    def _buffered(self, kind: str, shape: tuple) -> np.ndarray:
        key = (kind, shape)
        buf = self._buffers.get(key)
        if buf is None or buf[1] == buf[0].shape[0]:
            size = int(np.prod(shape, dtype=np.int64))
            n = max(1, min(self.block, _BUFFER_VALUES // max(1, size)))
            draw = {"random": lambda g: g.random((n,) + shape),
                    "normal": lambda g: g.standard_normal((n,) + shape)}[kind]
            buf = self._buffers[key] = [np.stack([draw(g) for g in self.generators], axis=1), 0]
        out = buf[0][buf[1]]
        buf[1] += 1
        return out

    def random(self, shape=()) -> np.ndarray:
        return self._buffered("random", tuple(shape))

    def standard_normal(self, shape=()) -> np.ndarray:
        return self._buffered("normal", tuple(shape))

    def integers(self, high: int, shape=()) -> np.ndarray:
        if shape == ():
            return np.array([g.integers(high) for g in self.generators])
        return np.stack([g.integers(high, size=shape) for g in self.generators])


def replication_seeds(master_seed: int, n: int, phase: int = 0) -> list[np.random.SeedSequence]:
    """Seed sequences for replications ``0..n-1`` of a phase.

    Replication ``i`` depends only on ``(master_seed, phase, i)``, so the same
    replication is reproduced whatever batch it is run in.
    """
    return [np.random.SeedSequence(master_seed, spawn_key=(phase, i)) for i in range(n)]


def split_streams(seqs: Sequence[np.random.SeedSequence]) -> tuple[RngStreams, RngStreams, RngStreams]:
    """Environment, algorithm and arm-sampling streams for each replication.

    Children get the keys a first ``spawn`` would give, without advancing the
    parent, so splitting the same seeds twice yields the same streams.
    """
    children = [[_child(s, k) for k in range(3)] for s in seqs]
    return tuple(
        RngStreams.from_seed_sequences([c[k] for c in children])
        for k in (ENV_STREAM, ALGO_STREAM, SAMPLER_STREAM)
    )


def _child(seq: np.random.SeedSequence, k: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (k,), pool_size=seq.pool_size)


def batch_shape(n_runs: int | None) -> tuple[int, ...]:
    return () if n_runs is None else (n_runs,)


def sample_arms(policy: np.ndarray, rng: Rng) -> np.ndarray:
    """Draw one arm per replication from policies over the last axis."""
    cdf = np.cumsum(policy, axis=-1)
    u = rng.random(()) * cdf[..., -1]
    arms = (cdf <= np.asarray(u)[..., None]).sum(axis=-1)
    return np.minimum(arms, policy.shape[-1] - 1)
