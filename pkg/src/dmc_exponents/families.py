"""Builtin channel families and the ``name:param`` spec strings the CLI uses."""

from __future__ import annotations

import numpy as np

from .channel import Channel, ValidationError, make_channel


def bsc(p: float) -> Channel:
    """Binary symmetric channel with crossover probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"bsc crossover must be in [0,1], got {p}")
    return make_channel([[1.0 - p, p], [p, 1.0 - p]])


def bec(p: float) -> Channel:
    """Binary erasure channel; outputs are (0, 1, erasure)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"bec erasure probability must be in [0,1], got {p}")
    return make_channel([[1.0 - p, 0.0, p], [0.0, 1.0 - p, p]])


def z_channel(p: float) -> Channel:
    """Z-channel: input 0 is noiseless, input 1 flips to 0 with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"z-channel parameter must be in [0,1], got {p}")
    return make_channel([[1.0, 0.0], [p, 1.0 - p]])


def identity_channel(n: int) -> Channel:
    if n < 1:
        raise ValidationError("identity channel needs n >= 1")
    return make_channel(np.eye(n))


def useless_channel(n_inputs: int, n_outputs: int) -> Channel:
    """Channel with identical uniform rows; capacity zero."""
    if n_inputs < 1 or n_outputs < 1:
        raise ValidationError("useless channel needs positive alphabet sizes")
    return make_channel(np.full((n_inputs, n_outputs), 1.0 / n_outputs))


def random_channel(n_inputs: int, n_outputs: int, rng: np.random.Generator,
                   min_entry: float = 0.0) -> Channel:
    """Channel with rows drawn uniformly from the simplex (Dirichlet(1,..,1)).

    With min_entry > 0, rows are resampled until every entry clears it.
    """
    rows = np.empty((n_inputs, n_outputs))
    for i in range(n_inputs):
        while True:
            row = rng.dirichlet(np.ones(n_outputs))
            if min_entry == 0.0 or row.min() >= min_entry:
                rows[i] = row
                break
    return make_channel(rows)


def parse_channel_spec(spec: str, rng: np.random.Generator | None = None) -> Channel:
    """Parse a builtin spec such as ``bsc:0.1``, ``identity:3``, ``useless:2:4``,
    ``random:3x4``."""
    parts = spec.split(":")
    name = parts[0]
    try:
        if name == "bsc" and len(parts) == 2:
            return bsc(float(parts[1]))
        if name == "bec" and len(parts) == 2:
            return bec(float(parts[1]))
        if name == "z" and len(parts) == 2:
            return z_channel(float(parts[1]))
        if name == "identity" and len(parts) == 2:
            return identity_channel(int(parts[1]))
        if name == "useless" and len(parts) == 3:
            return useless_channel(int(parts[1]), int(parts[2]))
        if name == "random" and len(parts) == 2:
            nx, ny = parts[1].split("x")
            if rng is None:
                rng = np.random.default_rng(0)
            return random_channel(int(nx), int(ny), rng)
    except (ValueError, ValidationError) as exc:
        raise ValidationError(f"malformed channel spec {spec!r}: {exc}") from None
    raise ValidationError(f"unknown channel spec {spec!r}")
