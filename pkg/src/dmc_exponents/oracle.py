"""Brute-force enumeration reference for every exponent quantity.

Everything here is computed by exhaustive grids: rational-probability grids
over the input simplex and over auxiliary channels, and a fixed-step delta
grid. No iterative optimizer, no randomness, no shortcuts. The point is to
certify the production solvers, so this module deliberately re-derives the
information measures with plain formulas instead of importing the
production solver stacks; it is only ever called from tests and
verification tooling, never from the production code paths.

Ties on grids resolve to the lexicographically first grid point (numpy's
argmin/argmax convention on the lexicographically ordered grids), which
makes every oracle value bit-reproducible.

Feasible only for small alphabets: the auxiliary-channel grid has
(number of rows)^inputs elements. The default resolutions target 2x2
channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel, ValidationError, channel_digest
from .simplex import logsumexp, simplex_grid_array, simplex_grid_size

MAX_TABLE_ENTRIES = 20_000_000


@dataclass(frozen=True)
class OracleConfig:
    """Grid resolutions for the enumeration oracle.

    p_resolution: input distributions have entries k/p_resolution.
    v_resolution: auxiliary-channel rows have entries k/v_resolution.
    delta_step: spacing of the delta grids.
    delta_cap: upper end of the delta grid on the error-exponent side;
        a maximizer pinned at the cap is reported as +infinity.
    """

    p_resolution: int = 100
    v_resolution: int = 160
    delta_step: float = 1e-3
    delta_cap: float = 64.0

    def __post_init__(self):
        if self.p_resolution < 1 or self.v_resolution < 1:
            raise ValidationError("oracle grid resolutions must be >= 1")
        if not 0.0 < self.delta_step <= 0.5:
            raise ValidationError("oracle delta_step must be in (0, 0.5]")
        if self.delta_cap <= 0.0:
            raise ValidationError("oracle delta_cap must be positive")


DEFAULT_ORACLE_CONFIG = OracleConfig()


def _mutual_information_table(ps, vs):
    """I(P; V) for every P row and V in the batch: (Np, Nv)."""
    q = np.einsum("px,vxy->pvy", ps, vs)
    pv = ps[:, None, :, None] * vs[None, :, :, :]
    mask = pv > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask,
                         np.log(np.where(vs[None, :] > 0, vs[None, :], 1.0))
                         - np.log(np.where(q > 0, q, 1.0))[:, :, None, :],
                         0.0)
    return np.sum(pv * ratio, axis=(2, 3))


def _divergence_table(ps, vs, w):
    """D(V || W | P) for every P row and V in the batch: (Np, Nv), +inf
    where V places mass outside the support of W on the support of P."""
    active = (ps[:, None, :, None] > 0.0) & (vs[None, :, :, :] > 0.0)
    bad = active & (w[None, None, :, :] == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(vs > 0.0,
                         vs * (np.log(np.where(vs > 0, vs, 1.0))
                               - np.log(np.where(w > 0, w, 1.0))),
                         0.0)
    vals = np.einsum("px,vxy->pv", ps, np.where(np.isfinite(terms), terms, 0.0))
    vals = np.where(bad.any(axis=(2, 3)), np.inf, vals)
    return vals


class OracleTables:
    """Per-channel enumeration tables shared by all oracle quantities."""

    def __init__(self, W: Channel, cfg: OracleConfig = DEFAULT_ORACLE_CONFIG):
        self.W = W
        self.cfg = cfg
        self.w = W.matrix
        nx, ny = self.w.shape
        n_rows = simplex_grid_size(ny, cfg.v_resolution)
        n_vs = n_rows ** nx
        n_ps = simplex_grid_size(nx, cfg.p_resolution)
        if n_vs * n_ps > MAX_TABLE_ENTRIES:
            raise ValidationError(
                f"oracle tables would need {n_vs * n_ps} entries; "
                f"the enumeration oracle only scales to small alphabets")
        self.ps = simplex_grid_array(nx, cfg.p_resolution)
        rows = simplex_grid_array(ny, cfg.v_resolution)
        # lexicographic enumeration of all row combinations
        idx = np.indices((n_rows,) * nx).reshape(nx, -1).T
        self.vs = rows[idx]  # (Nv, nx, ny)
        self._i_table = None
        self._d_table = None
        self._j_sc = None
        self._j_err = None
        self._j_sc_min = None
        self._j_err_max = None

    # -- (P, V) tables -----------------------------------------------------

    def i_table(self):
        if self._i_table is None:
            self._i_table = self._chunked(_mutual_information_table)
        return self._i_table

    def d_table(self):
        if self._d_table is None:
            self._d_table = self._chunked(
                lambda ps, vs: _divergence_table(ps, vs, self.w))
        return self._d_table

    def _chunked(self, fn, chunk=4096):
        parts = [fn(self.ps, self.vs[i:i + chunk])
                 for i in range(0, self.vs.shape[0], chunk)]
        return np.concatenate(parts, axis=1)

    # -- J tables over the delta grids ------------------------------------

    def _j_of(self, deltas):
        """J_delta(P) for each delta and each grid P: (Nd, Np). The
        delta = -1 entries use the column-maximum limit form."""
        out = np.empty((deltas.size, self.ps.shape[0]))
        with np.errstate(divide="ignore"):
            log_w = np.log(self.w)
            log_p = np.log(self.ps)
        at_limit = deltas == -1.0
        if at_limit.any():
            lim = np.empty(self.ps.shape[0])
            for k, p in enumerate(self.ps):
                lim[k] = -math.log(self.w[p > 0.0].max(axis=0).sum())
            out[at_limit] = lim
        rest = ~at_limit
        ds = deltas[rest]
        for i0 in range(0, ds.size, 1024):
            d = ds[i0:i0 + 1024]
            inv = 1.0 / (1.0 + d)
            # log s_y(P) = log sum_x P(x) W(y|x)^(1/(1+delta))
            a = log_p[None, :, :, None] + inv[:, None, None, None] * log_w[None, None, :, :]
            log_s = logsumexp(a, axis=2)
            out[np.flatnonzero(rest)[i0:i0 + 1024]] = \
                -logsumexp((1.0 + d)[:, None, None] * log_s, axis=2)
        return out

    def sc_deltas(self):
        n = int(round(1.0 / self.cfg.delta_step))
        return -1.0 + np.arange(n + 1) * self.cfg.delta_step

    def err_deltas(self):
        n = int(math.ceil(self.cfg.delta_cap / self.cfg.delta_step))
        return np.minimum(np.arange(n + 1) * self.cfg.delta_step, self.cfg.delta_cap)

    def j_sc(self):
        if self._j_sc is None:
            self._j_sc = self._j_of(self.sc_deltas())
        return self._j_sc

    def j_err(self):
        if self._j_err is None:
            self._j_err = self._j_of(self.err_deltas())
        return self._j_err

    def j_sc_min(self):
        if self._j_sc_min is None:
            self._j_sc_min = self.j_sc().min(axis=1)
        return self._j_sc_min

    def j_err_max(self):
        if self._j_err_max is None:
            self._j_err_max = self.j_err().max(axis=1)
        return self._j_err_max


_tables: dict[tuple, OracleTables] = {}


def _get_tables(W: Channel, cfg: OracleConfig) -> OracleTables:
    key = (channel_digest(W), cfg)
    if key not in _tables:
        _tables[key] = OracleTables(W, cfg)
    return _tables[key]


def _check_rate(R: float):
    if R < 0.0:
        raise ValidationError(f"rate must be >= 0, got {R}")


# -- Gallager-form curves ------------------------------------------------


def oracle_strong_converse(R: float, W: Channel,
                           cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """max over the delta grid in [-1, 0] of min over the P grid of
    -delta*R + J_delta(P)."""
    _check_rate(R)
    t = _get_tables(W, cfg)
    vals = -t.sc_deltas() * R + t.j_sc_min()
    return float(vals.max())


def oracle_error_exponent(R: float, W: Channel,
                          cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """max over the delta grid in [0, cap] of max over the P grid of
    -delta*R + J_delta(P); +inf when the maximizer sits at the cap."""
    _check_rate(R)
    t = _get_tables(W, cfg)
    vals = -t.err_deltas() * R + t.j_err_max()
    i = int(vals.argmax())
    if i == vals.size - 1:
        return math.inf
    return float(vals[i])


# -- KL-divergence-form curves -------------------------------------------


def oracle_dk_exponent(R: float, W: Channel,
                       cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """min over the P and V grids of [R - I(P;V)]+ + D(V||W|P)."""
    _check_rate(R)
    t = _get_tables(W, cfg)
    obj = np.maximum(R - t.i_table(), 0.0) + t.d_table()
    return float(obj.min())


def oracle_sphere_packing_sc(R: float, W: Channel,
                             cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """min over the P grid and the V grid points with I(P;V) >= R of
    D(V||W|P); +inf when no grid point is feasible."""
    _check_rate(R)
    t = _get_tables(W, cfg)
    feasible = t.i_table() >= R
    if not feasible.any():
        return math.inf
    return float(np.where(feasible, t.d_table(), np.inf).min())


def oracle_sphere_packing_err(R: float, W: Channel,
                              cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """max over the P grid of min over V grid points with I(P;V) <= R of
    D(V||W|P); +inf when some P has no finite-divergence feasible V."""
    _check_rate(R)
    t = _get_tables(W, cfg)
    feasible = t.i_table() <= R
    per_p = np.where(feasible, t.d_table(), np.inf).min(axis=1)
    val = per_p.max()
    return math.inf if math.isinf(val) else float(val)


def oracle_tilde_g_delta(delta: float, R: float, W: Channel,
                         cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """-delta*R + min over the P and V grids of delta*I + D, delta in [-1, 0]."""
    _check_rate(R)
    if not -1.0 <= delta <= 0.0:
        raise ValidationError(f"oracle_tilde_g_delta needs delta in [-1, 0], got {delta}")
    t = _get_tables(W, cfg)
    with np.errstate(invalid="ignore"):
        obj = delta * t.i_table() + t.d_table()
    return -delta * R + float(np.where(np.isnan(obj), np.inf, obj).min())


def oracle_k_delta(delta: float, W: Channel,
                   cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """-min over the P and V grids of delta*I + D, delta in [-1, 0]."""
    return oracle_tilde_g_delta(delta, 0.0, W, cfg)


# -- scalar channel quantities -------------------------------------------


def oracle_capacity(W: Channel, cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """max over the P grid of I(P; W)."""
    t = _get_tables(W, cfg)
    q = t.ps @ t.w
    pw = t.ps[:, :, None] * t.w[None, :, :]
    mask = pw > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask,
                         np.log(np.where(t.w > 0, t.w, 1.0))[None]
                         - np.log(np.where(q > 0, q, 1.0))[:, None, :],
                         0.0)
    return float(np.sum(pw * ratio, axis=(1, 2)).max())


def oracle_zero_rate_threshold(W: Channel,
                               cfg: OracleConfig = DEFAULT_ORACLE_CONFIG) -> float:
    """-log of the min over the P grid of the largest total P-mass that any
    single output column can absorb within the support of W."""
    t = _get_tables(W, cfg)
    supp = (t.w > 0.0).astype(float)
    col_mass = t.ps @ supp  # (Np, ny)
    worst = col_mass.max(axis=1).min()
    if worst <= 0:
        return math.inf
    return float(min(-math.log(worst), math.log(t.w.shape[0]))) + 0.0


def clear_oracle_caches():
    """Drop the per-channel enumeration tables (mainly for tests)."""
    _tables.clear()
