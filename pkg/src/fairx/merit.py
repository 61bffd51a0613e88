"""Merit functions mapping an arm's mean reward to a positive merit.

Three families are supported: ``exp(c * theta)``, the identity, and the
piecewise-linear ``1 if theta <= 0 else L * theta + 1``. Policies only ever
need merit ratios, so besides ``eval`` each merit exposes ``log_eval`` and the
log-derivative used by the optimistic objective's gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

EXPONENTIAL = "exp"
IDENTITY = "identity"
PIECEWISE_LINEAR = "piecewise_linear"

_KINDS = (EXPONENTIAL, IDENTITY, PIECEWISE_LINEAR)
_ALIASES = {"exponential": EXPONENTIAL, "id": IDENTITY, "linear": IDENTITY, "pl": PIECEWISE_LINEAR}


def _exp(x: float) -> float:
    # saturates to inf for the Lipschitz constant of very steep merits
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


class MeritDomainError(ValueError):
    """Raised when a merit would be evaluated where it is not positive."""


@dataclass(frozen=True)
class MeritFunction:
    """A positive nondecreasing merit function with regularity constants.

    Parameters
    ----------
    kind : str
        ``"exp"``, ``"identity"`` or ``"piecewise_linear"``.
    param : float
        ``c`` for the exponential family, ``L`` for the piecewise-linear one;
        ignored for the identity.
    eval_domain : tuple of float
        Closed interval on which ``declared_min_merit`` and
        ``declared_lipschitz`` hold. Confidence regions are intersected with it
        before merits are evaluated.
    """

    kind: str
    param: float = 0.0
    eval_domain: tuple[float, float] = (-1.0, 1.0)
    declared_min_merit: float = field(init=False)
    declared_lipschitz: float = field(init=False)

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in _KINDS:
            raise ValueError(f"unknown merit kind {self.kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "kind", kind)
        lo, hi = (float(v) for v in self.eval_domain)
        if not lo <= hi:
            raise ValueError(f"empty eval_domain {self.eval_domain}")
        object.__setattr__(self, "eval_domain", (lo, hi))
        object.__setattr__(self, "param", float(self.param))
        if kind == EXPONENTIAL and self.param < 0:
            raise ValueError("exponential merit needs c >= 0 to be nondecreasing")
        if kind == PIECEWISE_LINEAR and self.param <= 0:
            raise ValueError("piecewise-linear merit needs L > 0")
        if kind == IDENTITY and lo <= 0:
            raise MeritDomainError(
                f"identity merit is only positive on theta > 0; eval_domain {self.eval_domain} is not"
            )
        min_merit, lipschitz = self.constants_on_interval(lo, hi)
        object.__setattr__(self, "declared_min_merit", min_merit)
        object.__setattr__(self, "declared_lipschitz", lipschitz)

    # constructors -------------------------------------------------------

    @classmethod
    def exponential(cls, c: float, eval_domain=(-1.0, 1.0)) -> "MeritFunction":
        return cls(EXPONENTIAL, c, eval_domain)

    @classmethod
    def identity(cls, eval_domain=(1e-6, 1.0)) -> "MeritFunction":
        return cls(IDENTITY, 0.0, eval_domain)

    @classmethod
    def piecewise_linear(cls, lipschitz: float, eval_domain=(-1.0, 1.0)) -> "MeritFunction":
        return cls(PIECEWISE_LINEAR, lipschitz, eval_domain)

    @classmethod
    def from_config(cls, spec: Mapping[str, Any]) -> "MeritFunction":
        """Build from a mapping such as ``{"kind": "exp", "c": 4.0}``."""
        spec = dict(spec)
        if "kind" not in spec:
            raise ValueError("merit spec needs a 'kind'")
        kind = spec.pop("kind")
        kind = _ALIASES.get(kind, kind)
        domain = tuple(spec.pop("eval_domain", (1e-6, 1.0) if kind == IDENTITY else (-1.0, 1.0)))
        param = 0.0
        try:
            if kind == EXPONENTIAL:
                param = spec.pop("c")
            elif kind == PIECEWISE_LINEAR:
                param = spec.pop("L")
        except KeyError as exc:
            raise ValueError(f"merit kind {kind!r} needs parameter {exc.args[0]!r}") from None
        if spec:
            raise ValueError(f"unexpected merit fields {sorted(spec)}")
        return cls(kind, param, domain)

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == EXPONENTIAL:
            out["c"] = self.param
        elif self.kind == PIECEWISE_LINEAR:
            out["L"] = self.param
        out["eval_domain"] = list(self.eval_domain)
        return out

    # evaluation ---------------------------------------------------------

    def eval(self, theta):
        """Merit of ``theta`` (scalar or array)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == EXPONENTIAL:
            out = np.exp(self.param * theta)
        elif self.kind == IDENTITY:
            if np.any(theta <= 0):
                raise MeritDomainError("identity merit evaluated at theta <= 0")
            out = theta
        else:
            out = np.where(theta <= 0, 1.0, self.param * theta + 1.0)
        return out if out.ndim else float(out)

    def log_eval(self, theta) -> np.ndarray:
        """``log f(theta)``; finite for every c, unlike ``eval``."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == EXPONENTIAL:
            return self.param * theta
        if self.kind == IDENTITY:
            if np.any(theta <= 0):
                raise MeritDomainError("identity merit evaluated at theta <= 0")
            return np.log(theta)
        return np.log1p(self.param * np.maximum(theta, 0.0))

    def log_derivative(self, theta):
        """``f'(theta) / f(theta)``. Right derivative at the piecewise kink."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == EXPONENTIAL:
            return self.param
        if self.kind == IDENTITY:
            return 1.0 / theta
        return np.where(theta > 0, self.param / (self.param * np.maximum(theta, 0.0) + 1.0), 0.0)

    def clip(self, theta):
        lo, hi = self.eval_domain
        return np.clip(theta, lo, hi)

    def constants_on_interval(self, lo: float, hi: float) -> tuple[float, float]:
        """Exact ``(min merit, Lipschitz constant)`` of the merit on ``[lo, hi]``."""
        if not lo <= hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        dlo, dhi = self.eval_domain
        if lo < dlo or hi > dhi:
            raise ValueError(f"[{lo}, {hi}] lies outside eval_domain [{dlo}, {dhi}]")
        if self.kind == EXPONENTIAL:
            c = self.param
            return _exp(c * lo), (c * _exp(c * hi) if c else 0.0)
        if self.kind == IDENTITY:
            if lo <= 0:
                raise MeritDomainError("identity merit needs lo > 0")
            return lo, 1.0
        L = self.param
        return (1.0 if lo <= 0 else L * lo + 1.0), (L if hi > 0 else 0.0)
