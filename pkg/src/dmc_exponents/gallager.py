"""The delta-parametrized exponent functions built on the Gallager-style
log-sum expression: J_delta, F_delta, their optimizations over the input
simplex, and the two outer delta searches (strong-converse and error
exponent).

Convention used throughout: F_delta(R, P | W) = -delta * R + J_delta(P | W).

This module never touches the KL-divergence formulation in ``klform``; the
two sides are kept on disjoint solver stacks so that comparing them is an
actual test of the equivalence theorems.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import Channel, Distribution, ValidationError, channel_digest
from .simplex import (golden_section_max, logsumexp, project_to_simplex,
                      projected_gradient_descent)

COARSE_DELTA_STEP = 0.02
DELTA_SEARCH_TOL = 1e-6
DEFAULT_DELTA_CAP = 64.0
DEFAULT_RESTARTS = 8


def _check_delta(delta: float):
    if delta < -1.0:
        raise ValidationError(f"delta must be >= -1, got {delta}")


def _check_rate(R: float):
    if R < 0.0:
        raise ValidationError(f"rate must be >= 0, got {R}")


def _j_limit_neg_one(p: np.ndarray, w: np.ndarray) -> float:
    """J_{-1}(P|W) = -log sum_y max over the support of P of W(y|x)."""
    support = p > 0.0
    col_max = w[support].max(axis=0)
    return -math.log(col_max.sum())


def _log_s(deltas: np.ndarray, ps: np.ndarray, w: np.ndarray) -> np.ndarray:
    """log sum_x P(x) W(y|x)^(1/(1+delta)), fully in log space so that
    exponents like 1/(1+delta) near delta = -1 cannot underflow."""
    inv = 1.0 / (1.0 + deltas)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
        log_p = np.log(ps)
    log_a = np.broadcast_to(inv[..., None, None] * log_w, ps.shape + w.shape[-1:])
    return logsumexp(log_p[..., None] + log_a, axis=-2)


def _j_values(deltas: np.ndarray, ps: np.ndarray, w: np.ndarray) -> np.ndarray:
    """J_delta for aligned batches: deltas (...,), ps (..., X). Requires delta > -1."""
    log_s = _log_s(deltas, ps, w)
    return -logsumexp((1.0 + deltas)[..., None] * log_s, axis=-1)


def _j_gradients(deltas: np.ndarray, ps: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient of J_delta with respect to P, same batching as _j_values."""
    inv = 1.0 / (1.0 + deltas)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    log_s = _log_s(deltas, ps, w)
    j = -logsumexp((1.0 + deltas)[..., None] * log_s, axis=-1)
    # gradient_x = -(1+delta) sum_y exp(delta*log_s + J + log_w/(1+delta));
    # 0 * -inf products mark terms whose true contribution is zero
    with np.errstate(invalid="ignore"):
        expo = (deltas[..., None, None] * log_s[..., None, :]
                + j[..., None, None]
                + inv[..., None, None] * log_w)
    expo = np.where(np.isnan(expo), -np.inf, expo)
    return -(1.0 + deltas)[..., None] * np.exp(np.minimum(expo, 700.0)).sum(axis=-1)


def gallager_j(delta: float, P: Distribution, W: Channel) -> float:
    """J_delta(P|W); the delta = -1 endpoint uses the analytic limit form."""
    _check_delta(delta)
    if P.size != W.input_size:
        raise ValidationError("distribution/channel dimension mismatch")
    if delta == -1.0:
        return _j_limit_neg_one(P.probs, W.matrix)
    return float(_j_values(np.asarray(delta), P.probs, W.matrix))


def f_delta(delta: float, R: float, P: Distribution, W: Channel) -> float:
    """F_delta(R, P|W) = -delta R + J_delta(P|W)."""
    _check_rate(R)
    return -delta * R + gallager_j(delta, P, W)


class _ChannelEvaluator:
    """Per-channel cache of min_P J_delta and max_P J_delta."""

    def __init__(self, W: Channel, restarts: int, seed: int):
        self.w = W.matrix
        self.restarts = restarts
        self.seed = seed
        self._min_cache: dict[float, float] = {}
        self._max_cache: dict[float, float] = {}
        self._min_arg: dict[float, np.ndarray] = {}
        self._max_arg: dict[float, np.ndarray] = {}
        self._refined: dict[tuple[float, bool], float] = {}

    def _starts(self, n_deltas: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        nx = self.w.shape[0]
        starts = np.empty((self.restarts, n_deltas, nx))
        starts[0] = 1.0 / nx
        if self.restarts > 1:
            starts[1:] = rng.dirichlet(np.ones(nx), size=(self.restarts - 1, n_deltas))
        return starts

    def _optimize_batch(self, deltas: np.ndarray, minimize: bool,
                        starts: np.ndarray | None = None, max_iter: int = 400):
        sign = 1.0 if minimize else -1.0
        if starts is None:
            starts = self._starts(deltas.size)
        d = np.broadcast_to(deltas, starts.shape[:-1])

        def value(x):
            return sign * _j_values(d, x, self.w)

        def grad(x):
            return sign * _j_gradients(d, x, self.w)

        xs, vals = projected_gradient_descent(value, grad, starts, max_iter=max_iter)
        idx = vals.argmin(axis=0)
        best_x = np.take_along_axis(xs, idx[None, :, None], axis=0)[0]
        return sign * vals.min(axis=0), best_x

    def j_refined(self, delta: float, p0: np.ndarray, minimize: bool) -> float:
        """Optimized J at one delta, warm-started from a nearby optimizer.

        Cached by delta: the refinement brackets repeat across rates, so the
        golden-section probes hit the same delta values again and again.
        """
        key = (float(delta), minimize)
        if key in self._refined:
            return self._refined[key]
        starts = np.stack([p0, np.full_like(p0, 1.0 / p0.size)])[:, None, :]
        vals, _ = self._optimize_batch(np.array([float(delta)]), minimize,
                                       starts=starts, max_iter=60)
        self._refined[key] = float(vals[0])
        return self._refined[key]

    def min_j_many(self, deltas) -> np.ndarray:
        """min_P J_delta for deltas in [-1, 0]; batched with caching."""
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        out = np.empty(deltas.shape)
        fresh = []
        for i, d in enumerate(deltas):
            if d == -1.0:
                # adding symbols to supp(P) only grows the column maxima, so
                # full support minimizes J_{-1}
                out[i] = self._min_cache.setdefault(
                    -1.0, -math.log(self.w.max(axis=0).sum()))
            elif d in self._min_cache:
                out[i] = self._min_cache[d]
            else:
                fresh.append(i)
        if fresh:
            idx = np.array(fresh)
            vals, xs = self._optimize_batch(deltas[idx], minimize=True)
            for i, v, p in zip(idx, vals, xs):
                self._min_cache[float(deltas[i])] = float(v)
                self._min_arg[float(deltas[i])] = p
                out[i] = v
        return out

    def min_arg(self, delta: float) -> np.ndarray:
        return self._min_arg.get(float(delta), np.full(self.w.shape[0], 1.0 / self.w.shape[0]))

    def max_arg(self, delta: float) -> np.ndarray:
        return self._max_arg.get(float(delta), np.full(self.w.shape[0], 1.0 / self.w.shape[0]))

    def max_j_many(self, deltas) -> np.ndarray:
        """max_P J_delta for deltas >= 0; batched with caching."""
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        out = np.empty(deltas.shape)
        fresh = [i for i, d in enumerate(deltas) if d not in self._max_cache]
        for i, d in enumerate(deltas):
            if d in self._max_cache:
                out[i] = self._max_cache[d]
        if fresh:
            idx = np.array(fresh)
            vals, xs = self._optimize_batch(deltas[idx], minimize=False)
            for i, v, p in zip(idx, vals, xs):
                self._max_cache[float(deltas[i])] = float(v)
                self._max_arg[float(deltas[i])] = p
                out[i] = v
        return out


_evaluators: dict[tuple, _ChannelEvaluator] = {}


def _evaluator(W: Channel, restarts: int, seed: int) -> _ChannelEvaluator:
    key = (channel_digest(W), restarts, seed)
    if key not in _evaluators:
        _evaluators[key] = _ChannelEvaluator(W, restarts, seed)
    return _evaluators[key]


def g_delta(delta: float, R: float, W: Channel, *,
            restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    """G_delta(R|W) = min_P F_delta(R, P|W), for delta in [-1, 0]."""
    _check_rate(R)
    if not -1.0 <= delta <= 0.0:
        raise ValidationError(f"g_delta needs delta in [-1, 0], got {delta}")
    ev = _evaluator(W, restarts, seed)
    return -delta * R + float(ev.min_j_many([delta])[0])


def e_delta(delta: float, R: float, W: Channel, *,
            restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    """E_delta(R|W) = max_P F_delta(R, P|W), for delta >= 0."""
    _check_rate(R)
    if delta < 0.0:
        raise ValidationError(f"e_delta needs delta >= 0, got {delta}")
    ev = _evaluator(W, restarts, seed)
    return -delta * R + float(ev.max_j_many([delta])[0])


def strong_converse_exponent(R: float, W: Channel, *,
                             restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    """max over delta in [-1, 0] of G_delta(R|W).

    Coarse grid (step 0.02) plus golden-section refinement to delta
    tolerance 1e-6; golden section is validated against a dense grid in
    the test suite.
    """
    _check_rate(R)
    ev = _evaluator(W, restarts, seed)
    grid = np.round(np.arange(-1.0, 0.0 + 1e-12, COARSE_DELTA_STEP), 10)
    vals = -grid * R + ev.min_j_many(grid)
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    p0 = ev.min_arg(float(grid[i]))

    def f(d):
        if d == -1.0:
            return -d * R + float(ev.min_j_many([d])[0])
        return -d * R + ev.j_refined(d, p0, minimize=True)

    _, refined = golden_section_max(f, lo, hi, tol=DELTA_SEARCH_TOL)
    # the value at delta = 0 is exactly zero, so the max is nonnegative
    return max(float(vals[i]), refined, 0.0)


def error_exponent(R: float, W: Channel, delta_cap: float = DEFAULT_DELTA_CAP, *,
                   restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    """max over delta in [0, delta_cap] of E_delta(R|W).

    Returns math.inf when the maximizer is pinned at delta_cap, signalling
    divergence (R below the zero-rate threshold of W).
    """
    _check_rate(R)
    if delta_cap <= 0.0:
        raise ValidationError("delta_cap must be positive")
    ev = _evaluator(W, restarts, seed)
    grid = np.unique(np.concatenate([
        np.linspace(0.0, min(1.0, delta_cap), 51),
        np.linspace(min(1.0, delta_cap), min(8.0, delta_cap), 36),
        np.geomspace(min(8.0, delta_cap), delta_cap, 24),
        [delta_cap],
    ]))
    vals = -grid * R + ev.max_j_many(grid)
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    p0 = ev.max_arg(float(grid[i]))

    def f(d):
        return -d * R + ev.j_refined(d, p0, minimize=False)

    d_star, refined = golden_section_max(f, lo, hi, tol=DELTA_SEARCH_TOL)
    best = max(float(vals[i]), refined, 0.0)
    if i == grid.size - 1 or d_star >= delta_cap - 1e-3:
        return math.inf
    return best


def clear_caches():
    """Drop per-channel optimization caches (mainly for tests)."""
    _evaluators.clear()
