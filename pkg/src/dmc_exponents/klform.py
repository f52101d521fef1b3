"""The KL-divergence (sphere-packing style) side of the exponent theory.

Everything here is phrased as optimization of delta*[I(P;V) - R] + D(V||W|P)
over auxiliary channels V, plus outer searches over P and delta. The rate
enters that objective affinely, so per-channel "profiles" over a delta grid
are computed once and reused across rates.

Inner V-minimization uses the tilted-channel fixed point
V(y|x) proportional to W(y|x)^(1/(1+delta)) * q(y)^(delta/(1+delta)),
with q re-derived from V each pass; the delta = -1 endpoint uses the
difference-of-convex update V proportional to W * V/q. For delta < 0 the
objective is a difference of convex functions, so solutions are multistarted
and (at small alphabets) cross-checked against a dense grid.

This module never calls into ``gallager``; the two stacks stay disjoint so
the verifier's equality checks mean something.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .channel import Channel, Distribution, ValidationError, channel_digest
from .simplex import (golden_section_max, logsumexp, project_to_simplex,
                      simplex_grid_array)

_Q_FLOOR = 1e-300


@dataclass(frozen=True)
class VSolverConfig:
    """Effort knobs for the inner V-minimization heuristics."""

    restarts: int = 16
    tilt_iterations: int = 200
    convergence_tol: float = 1e-10
    grid_fallback_resolution: int = 24

    def __post_init__(self):
        if self.restarts < 1 or self.tilt_iterations < 1 or self.grid_fallback_resolution < 1:
            raise ValidationError("solver config counts must be >= 1")
        if self.convergence_tol <= 0:
            raise ValidationError("convergence_tol must be positive")


DEFAULT_CONFIG = VSolverConfig()


@dataclass(frozen=True)
class ExponentCurve:
    """Sampled rate -> value function with provenance metadata."""

    points: tuple
    method_tag: str
    channel_digest: str

    def __post_init__(self):
        rates = [r for r, _ in self.points]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValidationError("curve rates must be strictly increasing")
        object.__setattr__(self, "points", tuple((float(r), float(v)) for r, v in self.points))


# ---------------------------------------------------------------------------
# batched objective evaluation
# ---------------------------------------------------------------------------

def _log_safe(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _objectives(ps, v, logw):
    """I(P;V) and D(V||W|P) for batches v (..., K, X, Y), ps (K, X).

    Returns (I, D) with shape (..., K).
    """
    q = np.einsum("kx,...kxy->...ky", ps, v)
    logq = _log_safe(np.maximum(q, _Q_FLOOR))
    mask = v > 0.0
    logv = np.where(mask, _log_safe(np.where(mask, v, 1.0)), 0.0)
    with np.errstate(invalid="ignore"):
        i_terms = np.where(mask, v * (logv - logq[..., None, :]), 0.0)
        d_terms = np.where(mask, v * (logv - logw), 0.0)
    i_val = np.einsum("kx,...kxy->...k", ps, i_terms)
    d_val = np.einsum("kx,...kxy->...k", ps, d_terms)
    return i_val, d_val


def _row_softmax(logt):
    peak = logt.max(axis=-1, keepdims=True)
    t = np.exp(logt - peak)
    return t / t.sum(axis=-1, keepdims=True)


def _random_v_starts(w, n, rng):
    """n random channels supported where w is. Shape (n, X, Y)."""
    supp = w > 0.0
    raw = rng.random((n,) + w.shape) * supp
    # a row could conceivably draw all zeros only if rng returns exact 0.0
    raw = np.where(supp & (raw <= 0.0), 1e-12, raw)
    return raw / raw.sum(axis=-1, keepdims=True)


def _analytic_tilt(ps, deltas, logw, supp):
    """Closed-form stationary point of the inner problem: the tilted channel
    with output weight q(y) proportional to s(y)^(1+delta), where
    s(y) = sum_x P(x) W(y|x)^(1/(1+delta)).

    For delta < 0 this fixed point repels the alternating iteration even when
    it is the global minimizer, so it is planted directly as a candidate.
    Rows with delta == -1 fall back to W. ps: (K, X), deltas: (K,);
    returns (K, X, Y).
    """
    at_m1 = deltas == -1.0
    safe = np.where(at_m1, 0.0, deltas)
    inv = (1.0 / (1.0 + safe))[:, None]
    with np.errstate(divide="ignore"):
        log_p = np.log(ps)
    log_s = logsumexp(log_p[:, :, None] + inv[..., None] * logw, axis=1)  # (K, Y)
    log_q = (1.0 + safe)[:, None] * log_s
    log_q -= logsumexp(log_q, axis=-1)[..., None]
    log_q = np.maximum(log_q, -745.0)
    logt = inv[..., None] * logw + (safe * inv[:, 0])[:, None, None] * log_q[:, None, :]
    logt = np.where(supp, logt, -np.inf)
    out = _row_softmax(logt)
    if at_m1.any():
        out = np.where(at_m1[:, None, None], np.exp(np.where(supp, logw, -np.inf)), out)
    return out


def _tilt_update(v, ps, deltas, logw, supp):
    """One pass of the tilted fixed point; DCA update on delta == -1 rows.

    v: (S, K, X, Y); ps: (K, X); deltas: (K,).
    """
    q = np.einsum("kx,skxy->sky", ps, v)
    logq = _log_safe(np.maximum(q, _Q_FLOOR))[..., None, :]
    at_m1 = deltas == -1.0
    safe = np.where(at_m1, 0.0, deltas)
    inv = (1.0 / (1.0 + safe))[:, None, None]
    pw = (safe / (1.0 + safe))[:, None, None]
    logt = inv * logw + pw * logq
    if at_m1.any():
        mask_v = v > 0.0
        logv = np.where(mask_v, _log_safe(np.where(mask_v, v, 1.0)), -np.inf)
        logt_dca = logw + logv - logq
        logt = np.where(at_m1[:, None, None], logt_dca, logt)
    logt = np.where(supp, logt, -np.inf)
    return _row_softmax(logt)


def _min_v_engine(w, ps, deltas, *, n_starts, iters, tol, seed, keep_finals=False):
    """Minimize delta*I(P;V) + D(V||W|P) over V for aligned batches.

    ps: (K, X), deltas: (K,). Returns (values (K,), V_best (K, X, Y),
    finals (S, K, X, Y) or None). The same random initializations are shared
    across the batch so values vary smoothly with P.
    """
    K, X = ps.shape
    Y = w.shape[1]
    logw = _log_safe(w)
    supp = w > 0.0
    rng = np.random.default_rng(seed)
    v = np.empty((n_starts, K, X, Y))
    v[0] = w
    if n_starts > 1:
        v[1] = _analytic_tilt(ps, deltas, logw, supp)
    if n_starts > 2:
        v[2:] = _random_v_starts(w, n_starts - 2, rng)[:, None, :, :]

    i_val, d_val = _objectives(ps, v, logw)
    best_vals = deltas * i_val + d_val
    best_v = v.copy()
    stall = 0
    for _ in range(iters):
        v = _tilt_update(v, ps, deltas, logw, supp)
        i_val, d_val = _objectives(ps, v, logw)
        vals = deltas * i_val + d_val
        improved = vals < best_vals
        gain = np.where(improved, best_vals - vals, 0.0)
        if improved.any():
            best_v = np.where(improved[..., None, None], v, best_v)
            best_vals = np.where(improved, vals, best_vals)
        if gain.max(initial=0.0) < tol:
            stall += 1
            if stall >= 2:
                break
        else:
            stall = 0
    idx = best_vals.argmin(axis=0)
    values = np.take_along_axis(best_vals, idx[None, :], axis=0)[0]
    v_best = np.take_along_axis(best_v, idx[None, :, None, None], axis=0)[0]
    return values, v_best, (best_v if keep_finals else None)


# ---------------------------------------------------------------------------
# per-channel solver with cached delta profiles
# ---------------------------------------------------------------------------

_SC_DELTA_GRID = np.round(np.linspace(-1.0, 0.0, 101), 12)
_ERR_DELTA_GRID = np.unique(np.concatenate([
    np.linspace(0.0, 2.0, 81),
    np.linspace(2.0, 8.0, 31),
    np.geomspace(8.0, 64.0, 20),
]))
_DK_DELTA_GRID = np.linspace(-1.0, 0.0, 13)


def _coarse_p_grid(n: int) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = np.linspace(0.0, 1.0, 33)
        return np.column_stack([t, 1.0 - t])
    m = {3: 8, 4: 5}.get(n, 3)
    return simplex_grid_array(n, m)


class _KLSolver:
    """Per-channel state: cached delta profiles and scalar invariants."""

    def __init__(self, W: Channel, cfg: VSolverConfig, seed: int):
        self.W = W
        self.w = W.matrix
        self.cfg = cfg
        self.seed = seed
        self.nx, self.ny = self.w.shape
        self._min_tilde0: dict[float, float] = {}
        self._max_tilde0: dict[float, float] = {}
        self._sc_profile = None
        self._err_profile = None
        self._sweep_cache: dict[tuple, tuple] = {}

    # -- inner minimization over V, outer over P ---------------------------

    def _engine(self, ps, deltas, n_starts=3, iters=None, keep_finals=False):
        iters = iters or min(self.cfg.tilt_iterations, 80)
        return _min_v_engine(self.w, ps, deltas, n_starts=n_starts, iters=iters,
                             tol=self.cfg.convergence_tol, seed=self.seed,
                             keep_finals=keep_finals)

    def _min_p_joint(self, deltas, iters_outer=100):
        """min over P and V of delta*I + D, batched over a delta grid.

        The inner problem is a difference of convex functions for delta < 0
        and the tilted fixed point alone can stall there, so each outer pass
        combines three candidate moves per grid point -- a tilted update, a
        backtracked exact-gradient step on V, and solutions propagated from
        neighbouring deltas (continuation along the grid) -- plus an
        exact-gradient projected step on P. Returns values (G,).
        """
        deltas = np.asarray(deltas, dtype=float)
        G = deltas.size
        logw = _log_safe(self.w)
        supp = self.w > 0.0
        pc = _coarse_p_grid(self.nx)
        C = pc.shape[0]
        ps_tiled = np.repeat(pc, G, axis=0)
        d_tiled = np.tile(deltas, C)
        vals, v_seed, _ = self._engine(ps_tiled, d_tiled, n_starts=2, iters=40)
        vals = vals.reshape(C, G)
        v_seed = v_seed.reshape(C, G, self.nx, self.ny)
        best_c = vals.argmin(axis=0)
        p = pc[best_c]
        v = v_seed[best_c, np.arange(G)]

        def evaluate(pp, vv):
            i_val, d_val = _objectives(pp, vv[None, ...], logw)
            return (deltas * i_val + d_val)[0]

        val = evaluate(p, v)
        best_vals = val.copy()
        step_v = np.full(G, 0.2)
        step_p = np.full(G, 0.5)
        shifts = (1, 4, 16)
        for t in range(iters_outer):
            # candidate 1: tilted fixed-point move, plus the closed-form
            # stationary tilt at the current P
            vt = _tilt_update(v[None, ...], p, deltas, logw, supp)[0]
            val_t = evaluate(p, vt)
            take = val_t < val
            v = np.where(take[:, None, None], vt, v)
            val = np.where(take, val_t, val)
            va = _analytic_tilt(p, deltas, logw, supp)
            val_a = evaluate(p, va)
            take = val_a < val
            v = np.where(take[:, None, None], va, v)
            val = np.where(take, val_a, val)
            # candidate 2: backtracked gradient step on V
            q = np.einsum("gx,gxy->gy", p, v)
            logq = _log_safe(np.maximum(q, _Q_FLOOR))
            maskv = v > 0.0
            logv = np.where(maskv, _log_safe(np.where(maskv, v, 1.0)), -30.0)
            grad_v = p[:, :, None] * (
                deltas[:, None, None] * (logv - logq[:, None, :])
                + (logv - np.where(supp, logw, 0.0)))
            grad_v = np.where(supp, grad_v, 1e6)
            grad_v -= grad_v.mean(axis=-1, keepdims=True)
            accepted = np.zeros(G, dtype=bool)
            trial = step_v.copy()
            for _ in range(6):
                cand = project_to_simplex(v - trial[:, None, None] * grad_v)
                cand = np.where(supp, cand, 0.0)
                sums = cand.sum(axis=-1, keepdims=True)
                cand = np.where(sums > 0.0, cand / np.where(sums > 0.0, sums, 1.0), v)
                val_c = evaluate(p, cand)
                take = (val_c < val) & ~accepted
                if take.any():
                    v = np.where(take[:, None, None], cand, v)
                    val = np.where(take, val_c, val)
                    step_v = np.where(take, trial, step_v)
                    accepted |= take
                if accepted.all():
                    break
                trial = np.where(accepted, trial, trial * 0.5)
            step_v = np.where(accepted, step_v * 1.3, step_v * 0.3).clip(1e-10, 10.0)
            # candidate 3: neighbour propagation along the delta grid
            if G > 1:
                s = shifts[t % len(shifts)]
                for sh in (s, -s):
                    p_sh = np.roll(p, sh, axis=0)
                    v_sh = np.roll(v, sh, axis=0)
                    val_sh = evaluate(p_sh, v_sh)
                    take = val_sh < val
                    if take.any():
                        p = np.where(take[:, None], p_sh, p)
                        v = np.where(take[:, None, None], v_sh, v)
                        val = np.where(take, val_sh, val)
            # projected exact-gradient step on P at fixed V
            q = np.einsum("gx,gxy->gy", p, v)
            logq = _log_safe(np.maximum(q, _Q_FLOOR))
            maskv = v > 0.0
            logv = np.where(maskv, _log_safe(np.where(maskv, v, 1.0)), 0.0)
            dq = np.where(maskv, v * (logv - logq[:, None, :]), 0.0).sum(axis=-1)
            dvw = np.where(maskv, v * (logv - np.where(supp, logw, 0.0)), 0.0).sum(axis=-1)
            grad_p = deltas[:, None] * dq + dvw
            accepted = np.zeros(G, dtype=bool)
            trial = step_p.copy()
            for _ in range(8):
                cand = project_to_simplex(p - trial[:, None] * grad_p)
                val_c = evaluate(cand, v)
                take = (val_c < val) & ~accepted
                if take.any():
                    p = np.where(take[:, None], cand, p)
                    val = np.where(take, val_c, val)
                    step_p = np.where(take, trial, step_p)
                    accepted |= take
                if accepted.all():
                    break
                trial = np.where(accepted, trial, trial * 0.5)
            step_p = np.where(accepted, step_p * 1.4, step_p * 0.3).clip(1e-12, 10.0)
            best_vals = np.minimum(best_vals, val)
        return best_vals

    def _max_p_envelope(self, deltas, iters_outer=80):
        """max over P of min over V of delta*I + D, for deltas >= 0.

        The P-objective is concave here, so projected ascent with envelope
        gradients (Danskin) converges; the inner convex V-problem is kept
        warm across P iterates.
        """
        deltas = np.asarray(deltas, dtype=float)
        G = deltas.size
        logw = _log_safe(self.w)
        supp = self.w > 0.0
        # Seed each delta from the best point of a coarse P-grid scan. The
        # scan values converge linearly at rate delta/(1+delta), so ranking
        # raw unconverged values would favour whichever P converges slowest;
        # Aitken extrapolation of three chunked values removes that bias.
        pc = _coarse_p_grid(self.nx)
        C = pc.shape[0]
        ps_t = np.repeat(pc, G, axis=0)
        d_t = np.tile(deltas, C)
        v_run = np.broadcast_to(self.w, (1, C * G, self.nx, self.ny)).copy()
        hist = []
        for _ in range(3):
            for _ in range(20):
                v_run = _tilt_update(v_run, ps_t, d_t, logw, supp)
            i_s, d_s = _objectives(ps_t, v_run, logw)
            hist.append((d_t * i_s + d_s)[0])
        h0, h1, h2 = hist
        denom = (h2 - h1) - (h1 - h0)
        safe = np.abs(denom) > 1e-15
        est = np.where(safe, h2 - (h2 - h1) ** 2 / np.where(safe, denom, 1.0), h2)
        est = est.reshape(C, G)
        seed = est.argmax(axis=0)
        p = pc[seed]
        v = v_run[0].reshape(C, G, self.nx, self.ny)[seed, np.arange(G)][None, ...]
        step = np.full(G, 0.5)
        # two ascent phases with a fully converged inner solve between
        # them: phase one navigates with cheap warm inner probes, phase two
        # restarts from an exactly evaluated point so its gradients and
        # line-search comparisons are trustworthy
        best = np.full(G, -np.inf)
        for phase, n_outer in enumerate((iters_outer, max(iters_outer // 2, 24))):
            # phase two starts from exactly evaluated points, so it can
            # afford deeper (less biased) inner probes in its line search
            n_probe = 3 if phase == 0 else int(np.clip(3 + 0.3 * float(np.max(deltas)), 3, 20))
            for _ in range(n_outer):
                for _ in range(8):
                    v = _tilt_update(v, p, deltas, logw, supp)
                i_val, d_val = _objectives(p, v, logw)
                vals_now = (deltas * i_val + d_val)[0]
                vv = v[0]
                q = np.einsum("gx,gxy->gy", p, vv)
                logq = _log_safe(np.maximum(q, _Q_FLOOR))
                mask = vv > 0.0
                logv = np.where(mask, _log_safe(np.where(mask, vv, 1.0)), 0.0)
                dq = np.where(mask, vv * (logv - logq[:, None, :]), 0.0).sum(axis=-1)
                dw = np.where(mask, vv * (logv - np.where(supp, logw, 0.0)), 0.0).sum(axis=-1)
                grad = deltas[:, None] * dq + dw
                accepted = np.zeros(G, dtype=bool)
                trial = step.copy()
                for _ in range(10):
                    cand = project_to_simplex(p + trial[:, None] * grad)
                    v_probe = v
                    for _ in range(n_probe):
                        v_probe = _tilt_update(v_probe, cand, deltas, logw, supp)
                    i_c, d_c = _objectives(cand, v_probe, logw)
                    vals_c = (deltas * i_c + d_c)[0]
                    take = (vals_c > vals_now + 1e-15) & ~accepted
                    if take.any():
                        p = np.where(take[:, None], cand, p)
                        v = np.where(take[None, :, None, None], v_probe, v)
                        vals_now = np.where(take, vals_c, vals_now)
                        step = np.where(take, trial, step)
                        accepted |= take
                    if accepted.all():
                        break
                    trial = np.where(accepted, trial, trial * 0.5)
                step = np.where(accepted, step * 1.4, step * 0.3).clip(1e-12, 10.0)
            # Converge the inner solve exactly before reporting anything.
            # The warm inner values seen during the ascent are upper bounds
            # of the true minima whenever unconverged, and a max over P
            # amplifies exactly those overestimates.
            v, val = self._inner_converged(v, p, deltas, logw, supp)
            best = np.maximum(best, val)
        return best

    def _inner_converged(self, v, p, deltas, logw, supp):
        """Run the tilted fixed point to convergence and return (v, values).

        The iteration contracts at rate delta/(1+delta), so the budget has
        to grow linearly with delta; the value sequence is nonincreasing
        (alternating minimization), which makes the early stop safe.
        """
        budget = int(np.clip(80 + 30.0 * float(np.max(deltas)), 120, 6000))
        chunk = 25
        prev = None
        for _ in range(max(budget // chunk, 1)):
            for _ in range(chunk):
                v = _tilt_update(v, p, deltas, logw, supp)
            i_val, d_val = _objectives(p, v, logw)
            val = (deltas * i_val + d_val)[0]
            if prev is not None and np.all(np.abs(prev - val) < 1e-13):
                break
            prev = val
        return v, val

    # -- cached profiles ---------------------------------------------------

    def min_p_tilde0(self, delta: float) -> float:
        """min_P min_V {delta*I + D} at a single delta (cached); deltas
        lying on the dense profile grid reuse the shared profile solve."""
        key = float(delta)
        if key not in self._min_tilde0:
            if -1.0 <= key <= 0.0:
                hit = np.flatnonzero(np.abs(_SC_DELTA_GRID - key) < 1e-12)
                if hit.size:
                    grid, prof = self.sc_profile()
                    self._min_tilde0[key] = float(prof[hit[0]])
                    return self._min_tilde0[key]
            self._min_tilde0[key] = float(self._min_p_joint(np.array([key]))[0])
        return self._min_tilde0[key]

    def max_p_tilde0(self, delta: float) -> float:
        """max_P min_V {delta*I + D} at a single delta >= 0 (cached)."""
        key = float(delta)
        if key not in self._max_tilde0:
            self._max_tilde0[key] = float(self._max_p_envelope(np.array([key]))[0])
        return self._max_tilde0[key]

    def sc_profile(self):
        """(-K_delta) on the dense strong-converse delta grid."""
        if self._sc_profile is None:
            self._sc_profile = self._min_p_joint(_SC_DELTA_GRID)
        return _SC_DELTA_GRID, self._sc_profile

    def err_profile(self):
        """max_P tilde0 on the dense error-exponent delta grid."""
        if self._err_profile is None:
            self._err_profile = self._max_p_envelope(_ERR_DELTA_GRID)
        return _ERR_DELTA_GRID, self._err_profile

    # -- scalar channel invariants ----------------------------------------

    def capacity(self, tol: float = 1e-10) -> float:
        return _blahut_arimoto(self.w, tol)

    def zero_rate_threshold(self) -> float:
        return _zero_rate_threshold(self.w)

    def max_feasible_rate(self) -> float:
        """log of the largest mutual information reachable with D finite."""
        graph = csr_matrix(self.w > 0.0)
        match = maximum_bipartite_matching(graph, perm_type="column")
        return math.log(max(int((match >= 0).sum()), 1))

    # -- the clipped (Dueck-Korner) objective ------------------------------

    def dk_values(self, R: float, ps: np.ndarray, *, enhanced: bool = False) -> np.ndarray:
        """min over V of [R - I]+ + D at each P row, via delta-sweep candidates.

        The tilted solutions across a delta grid in [-1, 0] trace the
        (I, D) trade-off frontier at each P; the clipped objective is
        evaluated on every candidate (plus V = W), and a bisection on delta
        plants one extra candidate on the I = R boundary, where the clipped
        minimum sits whenever R exceeds I(P;W).
        """
        ps = np.asarray(ps, dtype=float)
        N = ps.shape[0]
        grid = _DK_DELTA_GRID
        if enhanced:
            grid = np.unique(np.concatenate([grid, np.linspace(-1.0, 0.0, 33)]))
        G = grid.size
        iters = min(self.cfg.tilt_iterations, 120 if enhanced else 60)
        logw = _log_safe(self.w)
        # the frontier sweep does not depend on R, so it is cached per P-batch
        key = (ps.tobytes(), G, iters)
        if key in self._sweep_cache:
            v_best, i_val, d_val = self._sweep_cache[key]
        else:
            ps_tiled = np.repeat(ps, G, axis=0)
            d_tiled = np.tile(grid, N)
            _, v_best, _ = self._engine(ps_tiled, d_tiled, n_starts=3, iters=iters)
            i_val, d_val = _objectives(ps_tiled, v_best[None, ...], logw)
            i_val, d_val = i_val[0], d_val[0]
            if len(self._sweep_cache) > 64:
                self._sweep_cache.clear()
            self._sweep_cache[key] = (v_best, i_val, d_val)
        clip = np.maximum(R - i_val, 0.0) + d_val  # (N*G,)
        best = clip.reshape(N, G).min(axis=1)
        iw, dw_ = _objectives(ps, np.broadcast_to(self.w, (1, N) + self.w.shape), logw)
        best = np.minimum(best, np.maximum(R - iw[0], 0.0) + dw_[0])
        if best.min() < 1e-12 and not enhanced:
            return np.maximum(best, 0.0)
        n_secant = 9 if enhanced else 6
        bvals, seeds = self._boundary_values(
            R, ps, i_val.reshape(N, G), grid, iters, n_secant)
        best = np.minimum(best, bvals)
        if enhanced:
            # descend the clipped objective directly; the tilted sweep only
            # sees the convex envelope of the (I, D) frontier, and a direct
            # descent can drop into non-convex dents of it
            v_grid = v_best.reshape(N, G, self.nx, self.ny)
            seeds = np.concatenate([seeds, v_grid], axis=1)
            best = np.minimum(best, self._clip_descent(R, ps, seeds, iters=80))
        return best

    def _boundary_values(self, R, ps, i_front, grid, iters, n_secant):
        """Clipped objective at the I = R boundary, by a safeguarded secant
        search on delta.

        i_front: mutual informations of the frontier solutions, shape (N, G);
        I is nonincreasing in delta along the frontier, so the root of
        I(delta) = R is bracketed by neighbouring grid points.
        """
        N, G = i_front.shape
        above = i_front >= R
        lo = np.full(N, -1.0)   # I(lo) >= R side
        hi = np.full(N, 0.0)
        i_lo = np.full(N, np.inf)
        i_hi = np.full(N, -np.inf)
        have = np.zeros(N, dtype=bool)
        for n in range(N):
            idx_above = np.nonzero(above[n])[0]
            idx_below = np.nonzero(~above[n])[0]
            if idx_above.size and idx_below.size:
                a, b_ = idx_above.max(), idx_below.min()
                lo[n], hi[n] = grid[a], grid[b_]
                i_lo[n], i_hi[n] = i_front[n, a], i_front[n, b_]
                have[n] = True
        seeds = np.broadcast_to(self.w, (N, 1) + self.w.shape).copy()
        if not have.any():
            return np.full(N, np.inf), seeds
        out = np.full(N, np.inf)
        logw = _log_safe(self.w)
        for _ in range(n_secant):
            denom = i_hi - i_lo
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = np.where(np.abs(denom) > 1e-15, (R - i_lo) / denom, 0.5)
            mid = lo + np.clip(frac, 0.05, 0.95) * (hi - lo)
            _, v_mid, _ = self._engine(ps, mid, n_starts=2, iters=iters)
            i_m, d_m = _objectives(ps, v_mid[None, ...], logw)
            i_m, d_m = i_m[0], d_m[0]
            vals = np.maximum(R - i_m, 0.0) + d_m
            better = have & (vals < out)
            out = np.where(better, vals, out)
            seeds[better, 0] = v_mid[better]
            go_lo = i_m >= R
            lo = np.where(go_lo, mid, lo)
            i_lo = np.where(go_lo, i_m, i_lo)
            hi = np.where(go_lo, hi, mid)
            i_hi = np.where(go_lo, i_m, i_hi)
        return out, seeds

    def _clip_descent(self, R, ps, seeds, iters=50):
        """Projected (sub)gradient descent on V of [R - I]+ + D at fixed P.

        seeds: (N, C, X, Y). Off-support entries are pinned to zero; the best
        value seen along the descent is returned per P row.
        """
        N, C = seeds.shape[:2]
        K = N * C
        p_rep = np.repeat(ps, C, axis=0)
        v = seeds.reshape(K, self.nx, self.ny).copy()
        logw = _log_safe(self.w)
        supp = self.w > 0.0

        def evaluate(vv):
            i_v, d_v = _objectives(p_rep, vv[None, ...], logw)
            return i_v[0], d_v[0]

        i_v, d_v = evaluate(v)
        val = np.maximum(R - i_v, 0.0) + d_v
        best = val.copy()
        step = np.full(K, 0.1)
        for _ in range(iters):
            q = np.einsum("kx,kxy->ky", p_rep, v)
            logq = _log_safe(np.maximum(q, _Q_FLOOR))
            maskv = v > 0.0
            logv = np.where(maskv, _log_safe(np.where(maskv, v, 1.0)), -30.0)
            lam = (i_v < R).astype(float)[:, None, None]
            grad = p_rep[:, :, None] * (
                (logv - np.where(supp, logw, 0.0))
                - lam * (logv - logq[:, None, :]))
            grad = np.where(supp, grad, 1e6)
            grad -= grad.mean(axis=-1, keepdims=True)
            accepted = np.zeros(K, dtype=bool)
            trial = step.copy()
            for _ in range(6):
                cand = project_to_simplex(v - trial[:, None, None] * grad)
                cand = np.where(supp, cand, 0.0)
                sums = cand.sum(axis=-1, keepdims=True)
                cand = np.where(sums > 0.0, cand / np.where(sums > 0.0, sums, 1.0), v)
                i_c, d_c = evaluate(cand)
                vals_c = np.maximum(R - i_c, 0.0) + d_c
                take = (vals_c < val) & ~accepted
                if take.any():
                    v = np.where(take[:, None, None], cand, v)
                    val = np.where(take, vals_c, val)
                    i_v = np.where(take, i_c, i_v)
                    step = np.where(take, trial, step)
                    accepted |= take
                if accepted.all():
                    break
                trial = np.where(accepted, trial, trial * 0.5)
            step = np.where(accepted, step * 1.3, step * 0.3).clip(1e-10, 10.0)
            best = np.minimum(best, val)
        return best.reshape(N, C).min(axis=1)

    def dk_exponent(self, R: float) -> float:
        """min over P and V of the clipped objective, via its supporting-line
        representation: the max over delta in [-1, 0] of -delta*R plus the
        joint (P, V) minimum of delta*I + D.

        The joint minimum per delta (the cached profile) is where the
        multistart min over P actually happens; the outer max inherits
        convexity, monotonicity and 1-Lipschitz continuity in R exactly,
        which pointwise clipped minimization would only give up to solver
        noise. Cross-checked against the direct per-P clipped solver
        (dk_values) in the test suite.

        Reported as the exact maximum over the dense delta grid, with no
        local refinement: the result is then literally a maximum of
        finitely many affine functions of R, so convexity, monotonicity
        and 1-Lipschitz continuity hold to machine precision.
        """
        grid, prof = self.sc_profile()
        vals = -grid * R + prof
        return max(float(vals.max()), 0.0)


_solvers: dict[tuple, _KLSolver] = {}


def _solver(W: Channel, cfg: VSolverConfig | None, seed: int) -> _KLSolver:
    cfg = cfg or DEFAULT_CONFIG
    key = (channel_digest(W), cfg, seed)
    if key not in _solvers:
        _solvers[key] = _KLSolver(W, cfg, seed)
    return _solvers[key]


def clear_caches():
    _solvers.clear()


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _check_rate(R: float):
    if R < 0.0:
        raise ValidationError(f"rate must be >= 0, got {R}")


def tilde_f_delta(delta: float, R: float, P: Distribution, W: Channel,
                  cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """min over V of delta*[I(P;V) - R] + D(V||W|P).

    For delta < 0 at small alphabets the multistarted tilted iteration is
    additionally bracketed by a dense V-grid search.
    """
    if delta < -1.0:
        raise ValidationError(f"delta must be >= -1, got {delta}")
    _check_rate(R)
    cfg = cfg or DEFAULT_CONFIG
    ps = P.probs[None, :]
    ds = np.array([float(delta)])
    vals, v_best, _ = _min_v_engine(W.matrix, ps, ds, n_starts=cfg.restarts,
                                    iters=cfg.tilt_iterations,
                                    tol=cfg.convergence_tol, seed=seed)
    best = float(vals[0])
    nx, ny = W.matrix.shape
    if delta < 0.0 and nx * (ny - 1) <= 4:
        best = min(best, _grid_min_tilde(W.matrix, P.probs, delta,
                                         cfg.grid_fallback_resolution))
    return best - delta * R


def _grid_min_tilde(w, p, delta, resolution):
    """Dense V-grid bracket for the difference-of-convex inner problem."""
    nx, ny = w.shape
    row_grid = simplex_grid_array(ny, resolution)
    idx = np.indices([row_grid.shape[0]] * nx).reshape(nx, -1).T
    vs = row_grid[idx]  # (M, X, Y)
    logw = _log_safe(w)
    i_val, d_val = _objectives(p[None, :], vs[:, None, :, :], logw)
    vals = delta * i_val[:, 0] + d_val[:, 0]
    return float(np.min(vals[np.isfinite(vals)]))


def dk_pointwise(R: float, P: Distribution, W: Channel,
                 cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """min over V of [R - I(P;V)]+ + D(V||W|P) at fixed P."""
    _check_rate(R)
    return float(_solver(W, cfg, seed).dk_values(R, P.probs[None, :], enhanced=True)[0])


def dk_exponent(R: float, W: Channel,
                cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """The Dueck-Korner strong-converse exponent: min over P and V of
    [R - I]+ + D, computed through its supporting-line (max over delta)
    representation; dk_pointwise is the direct per-P form."""
    _check_rate(R)
    return _solver(W, cfg, seed).dk_exponent(R)


def tilde_g_delta(delta: float, R: float, W: Channel,
                  cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """min over P of tilde_f_delta(delta, R, P|W)."""
    if delta < -1.0:
        raise ValidationError(f"delta must be >= -1, got {delta}")
    _check_rate(R)
    return _solver(W, cfg, seed).min_p_tilde0(delta) - delta * R


def k_delta(delta: float, W: Channel,
            cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """max over (P, V) of -delta*I(P;V) - D(V||W|P), for delta in [-1, 0]."""
    if not -1.0 <= delta <= 0.0:
        raise ValidationError(f"k_delta needs delta in [-1, 0], got {delta}")
    return -_solver(W, cfg, seed).min_p_tilde0(delta)


def sphere_packing_sc(R: float, W: Channel,
                      cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """min over P and over V with I(P;V) >= R of D(V||W|P).

    Computed by the delta sweep over [-1, 0] (supremum of the unconstrained
    tilted problems) with an exact feasibility check; math.inf when no
    finite-divergence V reaches mutual information R.
    """
    _check_rate(R)
    sol = _solver(W, cfg, seed)
    ln_x = math.log(sol.nx)
    if R > ln_x + 1e-12:
        raise ValidationError(
            f"sphere_packing_sc is defined for R <= ln|X| = {ln_x:.6g}; "
            "use dk_exponent for larger rates")
    if R > sol.max_feasible_rate() + 1e-9:
        return math.inf
    grid, prof = sol.sc_profile()
    vals = -grid * R + prof
    return max(float(vals.max()), 0.0)


def sphere_packing_err(R: float, W: Channel,
                       cfg: VSolverConfig | None = None, *, seed: int = 0) -> float:
    """max over P of min over V with I(P;V) <= R of D(V||W|P).

    math.inf for R below the zero-rate threshold of W.
    """
    _check_rate(R)
    sol = _solver(W, cfg, seed)
    c0 = sol.zero_rate_threshold()
    if R < c0 - 1e-12:
        return math.inf
    grid, prof = sol.err_profile()
    vals = -grid * R + prof
    i = int(np.argmax(vals))
    if i == grid.size - 1:
        return math.inf
    return max(float(vals[i]), 0.0)


def tilde_e_delta(delta: float, R: float, W: Channel,
                  cfg: VSolverConfig | None = None, *,
                  variant: str = "max", seed: int = 0) -> float:
    """KL-form counterpart of the error-exponent integrand, delta >= 0.

    Both an outer min over P and an outer max over P are offered; the
    verifier adjudicates numerically which one matches the Gallager form.
    """
    if delta < 0.0:
        raise ValidationError(f"tilde_e_delta needs delta >= 0, got {delta}")
    _check_rate(R)
    sol = _solver(W, cfg, seed)
    if variant == "max":
        return sol.max_p_tilde0(delta) - delta * R
    if variant == "min":
        return sol.min_p_tilde0(delta) - delta * R
    raise ValidationError(f"unknown tilde_e_delta variant {variant!r}")


def capacity(W: Channel, tol: float = 1e-10) -> float:
    """C(W) by alternating maximization, to within tol via the standard
    upper/lower bound pair."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    return _blahut_arimoto(W.matrix, tol)


def _blahut_arimoto(w, tol):
    nx = w.shape[0]
    p = np.full(nx, 1.0 / nx)
    mask = w > 0.0
    logw = _log_safe(w)
    for _ in range(200000):
        q = p @ w
        logq = _log_safe(np.maximum(q, _Q_FLOOR))
        with np.errstate(invalid="ignore"):
            d = np.where(mask, w * (logw - logq), 0.0).sum(axis=1)
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower < tol:
            return max(0.5 * (upper + lower), 0.0)
        p = p * np.exp(d - upper)
        p /= p.sum()
    return max(0.5 * (upper + lower), 0.0)


def zero_rate_threshold(W: Channel) -> float:
    """-log min over P of max over y of P(support of column y).

    Exact via linear programming; 0 exactly when some output column has
    full support.
    """
    return _zero_rate_threshold(W.matrix)


def _zero_rate_threshold(w):
    supp = (w > 0.0).astype(float)
    if np.any(supp.sum(axis=0) == w.shape[0]):
        return 0.0
    nx, ny = w.shape
    # variables: (P_1..P_nx, t); minimize t s.t. supp^T P <= t, sum P = 1
    c = np.zeros(nx + 1)
    c[-1] = 1.0
    a_ub = np.hstack([supp.T, -np.ones((ny, 1))])
    b_ub = np.zeros(ny)
    a_eq = np.hstack([np.ones((1, nx)), np.zeros((1, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0.0, None)] * nx + [(None, None)], method="highs")
    if not res.success:
        raise ValidationError(f"zero-rate threshold LP failed: {res.message}")
    t = float(res.fun)
    return float(np.clip(-math.log(max(t, 1e-300)), 0.0, math.log(nx)))


_CURVE_QUANTITIES = {
    "G_dk": lambda R, W, cfg, seed: dk_exponent(R, W, cfg, seed=seed),
    "G_sp": lambda R, W, cfg, seed: sphere_packing_sc(R, W, cfg, seed=seed),
    "E_sp": lambda R, W, cfg, seed: sphere_packing_err(R, W, cfg, seed=seed),
    "capacity-line": lambda R, W, cfg, seed: capacity(W),
}


def emit_curve(quantity_tag: str, W: Channel, R_grid,
               cfg: VSolverConfig | None = None, *, seed: int = 0) -> ExponentCurve:
    """Evaluate a named KL-form quantity over a strictly increasing rate grid."""
    if quantity_tag not in _CURVE_QUANTITIES:
        raise ValidationError(
            f"unknown quantity tag {quantity_tag!r}; expected one of "
            f"{sorted(_CURVE_QUANTITIES)}")
    fn = _CURVE_QUANTITIES[quantity_tag]
    points = [(float(r), fn(float(r), W, cfg, seed)) for r in R_grid]
    return ExponentCurve(tuple(points), quantity_tag, channel_digest(W))
