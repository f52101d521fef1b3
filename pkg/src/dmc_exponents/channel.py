"""Finite-alphabet probability primitives: distributions, channels and the
two information measures (mutual information, conditional KL divergence)
everything else is built from.

All logarithms are natural; every quantity in this package is in nats.
+infinity is represented by ``math.inf`` and propagated as a first-class
value, never as a large finite float.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

STOCHASTICITY_TOL = 1e-9
NEGATIVE_ENTRY_TOL = -1e-12


class ValidationError(ValueError):
    """Raised when a probability vector or stochastic matrix is malformed."""


def _as_float_array(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValidationError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _clean_probability_vector(weights, name):
    """Validate, clamp tiny negatives and renormalize a probability vector."""
    w = _as_float_array(weights, name)
    if w.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if np.any(w < NEGATIVE_ENTRY_TOL):
        raise ValidationError(f"{name} has a negative entry: min {w.min():g}")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if abs(total - 1.0) > STOCHASTICITY_TOL:
        raise ValidationError(f"{name} sums to {total:.12g}, not 1")
    return w / total


@dataclass(frozen=True)
class Distribution:
    """Probability vector on a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _clean_probability_vector(self.probs, "distribution")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    @staticmethod
    def uniform(n: int) -> "Distribution":
        return Distribution(np.full(n, 1.0 / n))

    @staticmethod
    def point_mass(i: int, n: int) -> "Distribution":
        w = np.zeros(n)
        w[i] = 1.0
        return Distribution(w)


@dataclass(frozen=True)
class Channel:
    """Row-stochastic matrix W(y|x), shape (input_size, output_size)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_float_array(self.matrix, "channel matrix")
        if m.ndim != 2:
            raise ValidationError("channel matrix must be two-dimensional")
        rows = np.empty_like(m)
        for i, row in enumerate(m):
            try:
                rows[i] = _clean_probability_vector(row, f"row {i}")
            except ValidationError as exc:
                raise ValidationError(f"channel row {i} invalid: {exc}") from None
        rows.setflags(write=False)
        object.__setattr__(self, "matrix", rows)

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    def digest(self) -> str:
        return channel_digest(self)


def channel_digest(W: Channel) -> str:
    """Short stable identifier of a channel matrix."""
    h = hashlib.sha256(W.matrix.tobytes())
    h.update(str(W.matrix.shape).encode())
    return h.hexdigest()[:12]


def make_channel(rows) -> Channel:
    """Validate a raw matrix and return a Channel.

    Entries below -1e-12 and rows whose sums deviate from 1 by more than
    1e-9 are rejected; anything within tolerance is clamped/renormalized.
    """
    try:
        m = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"matrix is not rectangular numeric data: {exc}") from None
    return Channel(m)


def _check_dims(P: Distribution, V: Channel):
    if P.size != V.input_size:
        raise ValidationError(
            f"dimension mismatch: |P| = {P.size}, channel input size = {V.input_size}"
        )


def output_distribution(P: Distribution, V: Channel) -> Distribution:
    """Output marginal q(y) = sum_x P(x) V(y|x)."""
    _check_dims(P, V)
    return Distribution(P.probs @ V.matrix)


def mutual_information(P: Distribution, V: Channel) -> float:
    """I(P;V) in nats, with the 0 log 0 convention. Always finite."""
    _check_dims(P, V)
    return _mutual_information_raw(P.probs, V.matrix)


def _mutual_information_raw(p: np.ndarray, v: np.ndarray) -> float:
    q = p @ v
    pv = p[:, None] * v
    mask = pv > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, np.log(np.where(mask, v, 1.0)) - np.log(np.where(q > 0, q, 1.0)), 0.0)
    return float(np.sum(pv * ratio))


def conditional_divergence(V: Channel, W: Channel, P: Distribution) -> float:
    """D(V||W|P) in nats; math.inf iff V puts mass where W has none on supp(P)."""
    if V.matrix.shape != W.matrix.shape:
        raise ValidationError(
            f"channel shape mismatch: {V.matrix.shape} vs {W.matrix.shape}"
        )
    _check_dims(P, V)
    return _conditional_divergence_raw(V.matrix, W.matrix, P.probs)


def _conditional_divergence_raw(v: np.ndarray, w: np.ndarray, p: np.ndarray) -> float:
    active = (p[:, None] > 0.0) & (v > 0.0)
    if np.any(active & (w == 0.0)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(active, v * (np.log(np.where(v > 0, v, 1.0)) - np.log(np.where(w > 0, w, 1.0))), 0.0)
    return float(p @ terms.sum(axis=1))
