"""Projected gradient ascent of the optimistic fair objective.

The objective at a parameter ``theta`` is the expected reward of the fair
policy built from ``theta`` when ``theta`` is taken to be the truth:

    F(theta) = sum_a p_a(theta) s_a,   p = fair_policy(merit, s),

where ``s_a = theta_a`` for multi-armed bandits and ``s_a = theta . x_a`` for
linear bandits. Maximisation is done by ascent, ``theta <- P(theta + lr * grad)``.
The problem is non-convex; the best visited iterate is returned.

Over a box the ascent can start from the best box vertex instead. With the
other coordinates fixed, every stationary point of ``F`` in ``theta_a`` is a
strict minimum (``d/dtheta_a`` of ``1 + g_a (theta_a - F)`` is positive there for
all three merit families), so the maximum sits at an endpoint of each interval,
the piecewise-linear kink at 0, or the lower edge of the merit's domain. Picking
one candidate per arm to maximise the ratio ``sum f v / sum f`` is solved
exactly by Dinkelbach iterations, which separate over arms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fairpolicy import fair_policy
from .merit import MeritFunction

ROOT_TOL = 1e-10
_MAX_ROOT_ITERS = 200


class BoxRegion:
    """Axis-aligned box ``lo <= theta <= hi``."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, float)
        self.hi = np.asarray(hi, float)
        if self.lo.shape != self.hi.shape:
            raise ValueError("box bounds must have the same shape")
        if np.any(self.lo > self.hi):
            raise ValueError("box needs lo <= hi componentwise")

    @classmethod
    def around(cls, center, width) -> "BoxRegion":
        center = np.asarray(center, float)
        return cls(center - width, center + width)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def intersect(self, lo: float, hi: float) -> "BoxRegion":
        new_lo = np.clip(self.lo, lo, hi)
        new_hi = np.clip(self.hi, lo, hi)
        return BoxRegion(new_lo, np.maximum(new_hi, new_lo))

    def project(self, theta) -> np.ndarray:
        return np.clip(theta, self.lo, self.hi)

    def contains(self, theta, tol: float = 0.0) -> np.ndarray:
        theta = np.asarray(theta, float)
        return np.all((theta >= self.lo - tol) & (theta <= self.hi + tol), axis=-1)


class EllipsoidRegion:
    """``{theta : (theta - center)^T V (theta - center) <= radius_sq}``.

    Euclidean projection of an outside point ``y`` solves
    ``z = center + (I + mu V)^{-1} (y - center)`` for the multiplier ``mu > 0``
    that puts ``z`` on the boundary. In the eigenbasis of ``V`` this is a
    monotone scalar equation, solved by safeguarded Newton iterations.
    """

    def __init__(self, center, shape, radius_sq):
        self.center = np.asarray(center, float)
        self.shape = np.asarray(shape, float)
        self.radius_sq = np.asarray(radius_sq, float)
        if np.any(self.radius_sq < 0):
            raise ValueError("ellipsoid radius must be non-negative")
        self.eigvals, self.eigvecs = np.linalg.eigh(self.shape)
        if np.any(self.eigvals <= 0):
            raise ValueError("ellipsoid shape matrix must be positive definite")

    def norm_sq(self, theta) -> np.ndarray:
        diff = np.asarray(theta, float) - self.center
        return np.einsum("...i,...ij,...j->...", diff, self.shape, diff)

    def contains(self, theta, tol: float = 0.0) -> np.ndarray:
        return np.sqrt(np.maximum(self.norm_sq(theta), 0.0)) <= np.sqrt(self.radius_sq) + tol

    def project(self, theta) -> np.ndarray:
        theta = np.asarray(theta, float)
        diff = theta - self.center
        outside = self.norm_sq(theta) > self.radius_sq
        if not np.any(outside):
            return theta
        lam = self.eigvals
        u = np.einsum("...ji,...j->...i", self.eigvecs, diff)
        beta = np.broadcast_to(self.radius_sq, outside.shape)
        mu = _boundary_multiplier(lam, u, np.where(outside, beta, 1.0))
        w = u / (1.0 + mu[..., None] * lam)
        z_diff = np.einsum("...ij,...j->...i", self.eigvecs, w)
        # Pull back onto the region if the root's residual left it a hair outside.
        ns = np.einsum("...i,...i->...", lam * w, w)
        scale = np.where(ns > beta, np.sqrt(np.divide(beta, ns, out=np.zeros_like(ns), where=ns > 0)), 1.0)
        z = self.center + z_diff * scale[..., None]
        return np.where(outside[..., None], z, theta)


def _boundary_multiplier(lam, u, beta) -> np.ndarray:
    """Smallest ``mu >= 0`` with ``sum lam u^2 / (1 + mu lam)^2 = beta``.

    Newton on ``1/sqrt(g(mu)) - 1/sqrt(beta)`` inside a bisection bracket.
    Entries with ``beta == 0`` get ``mu = inf`` (projection onto the centre).
    Overflowing Newton steps on tiny radii fall back to bisection.
    """
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _boundary_multiplier_loop(lam, u, beta)


def _boundary_multiplier_loop(lam, u, beta) -> np.ndarray:
    lam_u2 = lam * u * u
    g0 = lam_u2.sum(axis=-1)
    zero = beta <= 0
    safe_beta = np.where(zero, 1.0, beta)
    inv_sqrt_beta = 1.0 / np.sqrt(safe_beta)
    lo = np.zeros_like(g0)
    hi = np.sqrt(np.sum(u * u / lam, axis=-1) / safe_beta) + 1e-300
    mu = lo.copy()
    done = zero | (g0 <= safe_beta)
    for _ in range(_MAX_ROOT_ITERS):
        denom = 1.0 + mu[..., None] * lam
        g = (lam_u2 / denom**2).sum(axis=-1)
        conv = np.abs(g - safe_beta) <= ROOT_TOL * safe_beta
        done = done | conv
        if np.all(done):
            break
        too_far = g < safe_beta
        hi = np.where(too_far, mu, hi)
        lo = np.where(too_far, lo, mu)
        dg = (-2.0 * lam * lam_u2 / denom**3).sum(axis=-1)
        phi = 1.0 / np.sqrt(g) - inv_sqrt_beta
        dphi = -0.5 * g**-1.5 * dg
        step = mu - phi / dphi
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        new_mu = np.where(bad, 0.5 * (lo + hi), step)
        mu = np.where(done, mu, new_mu)
        if np.all(done | (hi - lo <= 1e-15 * np.maximum(hi, 1.0))):
            break
    return np.where(zero, np.inf, mu)


@dataclass(frozen=True)
class PgdConfig:
    """Step size and number of ascent steps; the best iterate is returned.

    ``vertex_start`` starts box ascents from the better of ``init`` and the
    best box vertex rather than from ``init`` alone.
    """

    step_size: float = 0.01
    num_steps: int = 10
    vertex_start: bool = True

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.num_steps < 1:
            raise ValueError("num_steps must be at least 1")


def _scores(theta, contexts):
    if contexts is None:
        return theta
    return np.einsum("...kd,...d->...k", contexts, theta)


def optimistic_objective(merit: MeritFunction, theta, contexts=None) -> np.ndarray:
    """Expected reward of the fair policy induced by ``theta``, under ``theta``."""
    s = _scores(np.asarray(theta, float), contexts)
    p = fair_policy(merit, merit.clip(s))
    return (p * s).sum(axis=-1)


def objective_and_gradient(merit: MeritFunction, theta, contexts=None):
    """Objective value and its analytic gradient with respect to ``theta``.

    With ``p_a`` proportional to ``f(s_a)``, ``dF/ds_a = p_a (1 + g_a (s_a - F))``
    where ``g_a = f'(s_a) / f(s_a)``. Scores outside the merit's domain are
    clipped for the merit, which zeroes their ``g_a``.
    """
    theta = np.asarray(theta, float)
    s = _scores(theta, contexts)
    lo, hi = merit.eval_domain
    sc = np.clip(s, lo, hi)
    p = fair_policy(merit, sc)
    value = (p * s).sum(axis=-1)
    g = merit.log_derivative(sc)
    if lo > -np.inf or hi < np.inf:
        g = np.where((s >= lo) & (s <= hi), g, 0.0)
    ds = p * (1.0 + g * (s - value[..., None]))
    if contexts is None:
        return value, ds
    return value, np.einsum("...k,...kd->...d", ds, contexts)


_DINKELBACH_ITERS = 100


def best_box_vertex(merit: MeritFunction, region: BoxRegion) -> np.ndarray:
    """Exact maximiser of the multi-armed objective over a box (no contexts)."""
    lo, hi = np.broadcast_arrays(region.lo, region.hi)
    dlo = merit.eval_domain[0]
    cands = [lo, hi, np.clip(dlo, lo, hi)]
    if merit.kind == "piecewise_linear":
        cands.append(np.clip(0.0, lo, hi))
    C = np.stack(cands)
    logw = merit.log_eval(merit.clip(C))
    W = np.exp(logw - logw.max(axis=(0, -1), keepdims=True))
    x = hi.copy()
    lam = optimistic_objective(merit, x)
    pick = np.indices(C.shape[1:])
    for _ in range(_DINKELBACH_ITERS):
        j = np.argmax(W * (C - lam[..., None]), axis=0)
        nx = C[(j, *pick)]
        nlam = optimistic_objective(merit, nx)
        better = nlam > lam
        if not np.any(better):
            break
        x = np.where(better[..., None], nx, x)
        lam = np.where(better, nlam, lam)
    return x


def pgd_maximize(merit: MeritFunction, region, init=None, cfg: PgdConfig = PgdConfig(),
                 contexts=None, compiled: bool = True) -> np.ndarray:
    """Approximate ``argmax_{theta in region} F(theta)`` by projected ascent.

    Starts from ``init`` (default: the region centre), or for boxes with
    ``cfg.vertex_start`` from whichever of ``init`` and the best vertex scores
    higher, and returns the visited iterate with the highest objective, so the
    result is never worse than ``init``. Boxes without contexts run a compiled
    loop unless ``compiled=False``.
    """
    start = region.center if init is None else np.asarray(init, float)
    box = isinstance(region, BoxRegion) and contexts is None
    if compiled and box:
        return _pgd_box_compiled(merit, region, start, cfg)
    theta = region.project(start)
    if box and cfg.vertex_start:
        vertex = best_box_vertex(merit, region)
        use = optimistic_objective(merit, vertex) > optimistic_objective(merit, theta)
        theta = np.where(use[..., None], vertex, theta)
    best = theta
    best_val = None
    for step in range(cfg.num_steps + 1):
        val, grad = objective_and_gradient(merit, theta, contexts)
        if best_val is None:
            best_val = val
        else:
            better = val > best_val
            best_val = np.where(better, val, best_val)
            best = np.where(better[..., None], theta, best)
        if step == cfg.num_steps:
            break
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite gradient in optimistic objective")
        theta = region.project(theta + cfg.step_size * grad)
    return best


def _pgd_box_compiled(merit, region, start, cfg) -> np.ndarray:
    from ._kernels import KIND_CODES, pgd_box

    shape = np.broadcast_shapes(region.lo.shape, np.shape(start))
    k = shape[-1]

    def flat(v):
        v = np.asarray(v, float)
        if v.shape != shape:
            v = np.broadcast_to(v, shape)
        return np.ascontiguousarray(v).reshape(-1, k)

    dlo, dhi = merit.eval_domain
    best, ok = pgd_box(KIND_CODES[merit.kind], float(merit.param), float(dlo), float(dhi),
                       flat(region.lo), flat(region.hi), flat(start), float(cfg.step_size),
                       int(cfg.num_steps), bool(cfg.vertex_start))
    if not ok:
        raise FloatingPointError("non-finite gradient in optimistic objective")
    return best.reshape(shape)


def beta_schedule(t: int, d: int, W: float, delta: float) -> float:
    """Ellipsoid radius ``(W + sqrt(d ln(1 + t/d) + 2 ln(pi^2 t^2 / (3 delta))))^2``."""
    if t < 1:
        raise ValueError("beta schedule starts at t = 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    inner = d * math.log1p(t / d) + 2.0 * math.log(math.pi**2 * t**2 / (3.0 * delta))
    return (W + math.sqrt(inner)) ** 2
