"""Shared simplex machinery: Euclidean projection, batched projected-gradient
optimization with step-halving line search, golden-section search, and exact
rational simplex grids.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN_RATIO_INV = (math.sqrt(5.0) - 1.0) / 2.0


def logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    """log sum exp along one axis, tolerating -inf entries.

    Kept minimal (plain numpy, no dispatch layers) because it sits in the
    innermost optimization loops on small arrays.
    """
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)


class SolverDiagnosticError(RuntimeError):
    """Optimization failed to produce a usable value.

    Carries the best value found so far in ``best_value`` (may be nan).
    """

    def __init__(self, message: str, best_value: float):
        super().__init__(f"{message} (best value found: {best_value!r})")
        self.best_value = best_value


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of the last axis onto the probability simplex.

    Batched: v has shape (..., n).
    """
    n = v.shape[-1]
    u = np.sort(v, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1) - 1.0
    ks = np.arange(1, n + 1, dtype=float)
    cond = u - css / ks > 0.0
    # rho: largest k with the condition true; cond[...,0] is always true
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho + 1.0)[..., None]
    return np.maximum(v - theta, 0.0)


def projected_gradient_descent(value_fn, grad_fn, x0: np.ndarray, *,
                               max_iter: int = 400, improvement_tol: float = 1e-10,
                               max_halvings: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Minimize value_fn over the simplex (last axis of x0), batched.

    value_fn(x) -> (...) values; grad_fn(x) -> (..., n) gradients. Gradients
    are clipped and nan-scrubbed so boundary blowups only slow the search.
    Returns (x, values). To maximize, negate value_fn/grad_fn.
    """
    x = project_to_simplex(np.asarray(x0, dtype=float))
    v = value_fn(x)
    step = np.ones(v.shape)
    for _ in range(max_iter):
        g = grad_fn(x)
        g = np.clip(np.nan_to_num(g, nan=0.0, posinf=1e12, neginf=-1e12), -1e12, 1e12)
        # center the gradient; only its tangential component matters
        g = g - g.mean(axis=-1, keepdims=True)
        accepted = np.zeros(v.shape, dtype=bool)
        trial_step = step.copy()
        best_gain = np.zeros(v.shape)
        for _ in range(max_halvings):
            cand = project_to_simplex(x - trial_step[..., None] * g)
            vc = value_fn(cand)
            better = np.nan_to_num(v - vc, nan=-1.0) > 0.0
            take = better & ~accepted
            if np.any(take):
                x = np.where(take[..., None], cand, x)
                best_gain = np.where(take, v - vc, best_gain)
                v = np.where(take, vc, v)
                step = np.where(take, trial_step, step)
                accepted |= take
            if accepted.all():
                break
            trial_step = np.where(accepted, trial_step, trial_step * 0.5)
        step = np.where(accepted, step * 1.5, step * 0.25)
        step = np.clip(step, 1e-14, 1e6)
        if np.all(np.where(accepted, best_gain, 0.0) < improvement_tol):
            break
    return x, v


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-6) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [lo, hi].

    Returns (argmax, max). The caller is responsible for validating
    unimodality (e.g. against a dense grid).
    """
    a, b = float(lo), float(hi)
    if b - a <= tol:
        mid = 0.5 * (a + b)
        return mid, f(mid)
    c = b - GOLDEN_RATIO_INV * (b - a)
    d = a + GOLDEN_RATIO_INV * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN_RATIO_INV * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN_RATIO_INV * (b - a)
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def parabolic_peak(xs: np.ndarray, ys: np.ndarray, i: int) -> float:
    """Refine a grid maximum of a smooth concave sample by fitting a
    quadratic through the argmax point and its neighbours. Returns at
    least the grid value; falls back to it at the boundary or when the
    fit degenerates."""
    if i <= 0 or i >= xs.size - 1:
        return float(ys[i])
    x0, x1, x2 = xs[i - 1], xs[i], xs[i + 1]
    y0, y1, y2 = ys[i - 1], ys[i], ys[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    if denom == 0.0 or not np.all(np.isfinite([y0, y1, y2])):
        return float(y1)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a >= 0.0:
        return float(y1)
    x_star = np.clip(-b / (2.0 * a), x0, x2)
    c = y1 - a * x1 * x1 - b * x1
    return float(max(y1, a * x_star * x_star + b * x_star + c))


def simplex_grid_array(dimension: int, m: int) -> np.ndarray:
    """All probability vectors with entries k/m, k integer, lexicographically
    ordered by their weight tuples. Shape (N, dimension) with
    N = binom(m + dimension - 1, dimension - 1).
    """
    if dimension < 1 or m < 1:
        raise ValueError("dimension and m must be >= 1")
    if dimension == 1:
        return np.ones((1, 1))
    counts = _compositions(m, dimension)
    return counts / float(m)


def simplex_grid_size(dimension: int, m: int) -> int:
    return math.comb(m + dimension - 1, dimension - 1)


def _compositions(m: int, parts: int) -> np.ndarray:
    """Integer vectors of length `parts` summing to m, lexicographic order."""
    if parts == 1:
        return np.array([[m]], dtype=float)
    blocks = []
    for first in range(m + 1):
        rest = _compositions(m - first, parts - 1)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), float(first)), rest]))
    return np.vstack(blocks)
