"""Bandit algorithms behind one select / update interface, looked up by name."""

from __future__ import annotations

from typing import Any, Mapping

from .base import BanditAlgorithm, FixedPolicy, point_mass, theory_alpha, ucb_width
from .linear import FairXLinEG, FairXLinTS, FairXLinUCB, LinTS, LinUCB
from .mab import UCB, FairXEG, FairXTS, FairXUCB, ThompsonSampling

ALGORITHMS: dict[str, type[BanditAlgorithm]] = {
    cls.name: cls
    for cls in (FairXUCB, FairXTS, FairXEG, FairXLinUCB, FairXLinTS, FairXLinEG,
                UCB, ThompsonSampling, LinUCB, LinTS, FixedPolicy)
}


def make_algorithm(name: str, n_arms: int, *, rng, dim: int | None = None, merit=None,
                   n_runs: int | None = None, params: Mapping[str, Any] | None = None) -> BanditAlgorithm:
    """Instantiate algorithm ``name`` with hyperparameters ``params``."""
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {sorted(ALGORITHMS)}") from None
    kw = dict(params or {})
    kw.update(rng=rng, n_runs=n_runs, merit=merit if cls.fair else None)
    if cls.linear:
        if dim is None:
            raise ValueError(f"{name} is a linear bandit and needs a context dimension")
        return cls(n_arms, dim, **kw)
    return cls(n_arms, **kw)


__all__ = [
    "ALGORITHMS", "BanditAlgorithm", "FairXEG", "FairXLinEG", "FairXLinTS", "FairXLinUCB",
    "FairXTS", "FairXUCB", "FixedPolicy", "LinTS", "LinUCB", "ThompsonSampling", "UCB", "make_algorithm",
    "point_mass", "theory_alpha", "ucb_width",
]
