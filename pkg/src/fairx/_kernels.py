"""Compiled inner loops for projected ascent over boxes (the multi-armed hot path).

Mirrors the vectorised ascent and vertex search in :mod:`fairx.optim` row by row.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

KIND_CODES = {"exp": 0, "identity": 1, "piecewise_linear": 2}


@njit(cache=True)
def _log_merit(kind, param, dlo, dhi, v):
    x = min(max(v, dlo), dhi)
    if kind == 0:
        return param * x
    if kind == 1:
        return math.log(x)
    return math.log1p(param * max(x, 0.0))


@njit(cache=True)
def _value_grad(kind, param, dlo, dhi, theta, p, grad):
    k = theta.size
    top = -np.inf
    for a in range(k):
        p[a] = _log_merit(kind, param, dlo, dhi, theta[a])
        top = max(top, p[a])
    total = 0.0
    for a in range(k):
        p[a] = math.exp(p[a] - top)
        total += p[a]
    value = 0.0
    for a in range(k):
        p[a] /= total
        value += p[a] * theta[a]
    for a in range(k):
        s = theta[a]
        g = 0.0
        if dlo <= s <= dhi:
            if kind == 0:
                g = param
            elif kind == 1:
                g = 1.0 / s
            elif s > 0:
                g = param / (param * s + 1.0)
        grad[a] = p[a] * (1.0 + g * (s - value))
    return value


@njit(cache=True)
def _value(kind, param, dlo, dhi, theta, p):
    """Objective at ``theta``; leaves the unnormalised fair-policy weights in ``p``."""
    k = theta.size
    top = -np.inf
    for a in range(k):
        p[a] = _log_merit(kind, param, dlo, dhi, theta[a])
        top = max(top, p[a])
    total = 0.0
    value = 0.0
    for a in range(k):
        p[a] = math.exp(p[a] - top)
        total += p[a]
        value += p[a] * theta[a]
    return value / total


@njit(cache=True)
def _best_vertex(kind, param, dlo, dhi, lo, hi, out, p, work):
    """Dinkelbach search over per-arm candidates, as in ``optim.best_box_vertex``.

    ``work`` is scratch space of shape ``(9, k)``.
    """
    k = lo.size
    n_c = 4 if kind == 2 else 3
    cand = work[:4]
    w = work[4:8]
    trial = work[8]
    top = -np.inf
    for a in range(k):
        cand[0, a] = lo[a]
        cand[1, a] = hi[a]
        cand[2, a] = min(max(dlo, lo[a]), hi[a])
        cand[3, a] = min(max(0.0, lo[a]), hi[a])
        for c in range(n_c):
            w[c, a] = _log_merit(kind, param, dlo, dhi, cand[c, a])
            top = max(top, w[c, a])
    for a in range(k):
        for c in range(n_c):
            w[c, a] = math.exp(w[c, a] - top)
        out[a] = hi[a]
    lam = _value(kind, param, dlo, dhi, out, p)
    for _ in range(100):
        for a in range(k):
            best_c, best_s = 0, -np.inf
            for c in range(n_c):
                score = w[c, a] * (cand[c, a] - lam)
                if score > best_s:
                    best_c, best_s = c, score
            trial[a] = cand[best_c, a]
        new_lam = _value(kind, param, dlo, dhi, trial, p)
        if not new_lam > lam:
            break
        lam = new_lam
        for a in range(k):
            out[a] = trial[a]
    return lam


@njit(cache=True)
def _pgd_row(kind, param, dlo, dhi, lo, hi, start, step_size, num_steps, vertex_start,
             best, theta, p, grad, work):
    k = theta.size
    ok = True
    for a in range(k):
        theta[a] = min(max(start[a], lo[a]), hi[a])
    if vertex_start:
        vertex = work[9]
        v_val = _best_vertex(kind, param, dlo, dhi, lo, hi, vertex, p, work)
        if v_val > _value(kind, param, dlo, dhi, theta, p):
            for a in range(k):
                theta[a] = vertex[a]
    best_val = -np.inf
    for step in range(num_steps + 1):
        val = _value_grad(kind, param, dlo, dhi, theta, p, grad)
        if step == 0 or val > best_val:
            best_val = val
            for a in range(k):
                best[a] = theta[a]
        if step == num_steps:
            break
        for a in range(k):
            if not math.isfinite(grad[a]):
                ok = False
            theta[a] = min(max(theta[a] + step_size * grad[a], lo[a]), hi[a])
    return ok


@njit(cache=True)
def pgd_box(kind, param, dlo, dhi, lo, hi, init, step_size, num_steps, vertex_start):
    """Best iterate per row and a flag that is False if a gradient went non-finite."""
    n, k = init.shape
    best = np.empty((n, k))
    theta = np.empty(k)
    p = np.empty(k)
    grad = np.empty(k)
    work = np.empty((10, k))
    ok = True
    for r in range(n):
        ok &= _pgd_row(kind, param, dlo, dhi, lo[r], hi[r], init[r], step_size, num_steps,
                       vertex_start, best[r], theta, p, grad, work)
    return best, ok


@njit(cache=True)
def optimistic_box(kind, param, dlo, dhi, sums, counts, alpha, step_size, num_steps, vertex_start):
    """FairX-UCB's optimistic parameter and deployed policy for each row.

    The box is ``clip(mean) +- alpha / sqrt(count)`` intersected with the
    domain; unpulled arms get an infinite width, so their interval is the
    whole domain. Ascent starts at the clipped means. Rows with an unpulled
    arm deploy a point mass on the lowest such arm, the others the fair
    policy of the optimistic parameter. Returns ``(best, policy, ok)``.
    """
    n, k = counts.shape
    best = np.empty((n, k))
    policy = np.empty((n, k))
    lo = np.empty(k)
    hi = np.empty(k)
    centre = np.empty(k)
    theta = np.empty(k)
    p = np.empty(k)
    grad = np.empty(k)
    work = np.empty((10, k))
    ok = True
    for r in range(n):
        first_unpulled = -1
        for a in range(k):
            c = counts[r, a]
            if c == 0 and first_unpulled < 0:
                first_unpulled = a
            mean = sums[r, a] / c if c > 0 else 0.0
            width = alpha / math.sqrt(c) if c > 0 else np.inf
            centre[a] = min(max(mean, dlo), dhi)
            lo[a] = min(max(centre[a] - width, dlo), dhi)
            hi[a] = max(min(max(centre[a] + width, dlo), dhi), lo[a])
        ok &= _pgd_row(kind, param, dlo, dhi, lo, hi, centre, step_size, num_steps, vertex_start,
                       best[r], theta, p, grad, work)
        if first_unpulled >= 0:
            for a in range(k):
                policy[r, a] = 1.0 if a == first_unpulled else 0.0
        else:
            _value(kind, param, dlo, dhi, best[r], p)
            total = 0.0
            for a in range(k):
                total += p[a]
            for a in range(k):
                policy[r, a] = p[a] / total
    return best, policy, ok
