"""The enumeration oracle against closed forms on channels where the
optimum is known exactly. A deliberately coarse configuration keeps this
fast; the full-resolution oracle is exercised in the acceptance battery.
"""

import math

import numpy as np
import pytest

from dmc_exponents.families import bsc, identity_channel, useless_channel
from dmc_exponents.oracle import (OracleConfig, oracle_capacity,
                                  oracle_dk_exponent, oracle_error_exponent,
                                  oracle_k_delta, oracle_sphere_packing_err,
                                  oracle_sphere_packing_sc,
                                  oracle_strong_converse,
                                  oracle_tilde_g_delta,
                                  oracle_zero_rate_threshold)

COARSE = OracleConfig(p_resolution=40, v_resolution=40, delta_step=5e-3,
                      delta_cap=32.0)


def _hb(p: float) -> float:
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def test_oracle_capacity_grid_accuracy():
    # P-grid granularity 1/40 costs O(grid^2) in mutual information
    assert oracle_capacity(bsc(0.1), COARSE) == pytest.approx(
        math.log(2) - _hb(0.1), abs=5e-3)
    assert oracle_capacity(identity_channel(2), COARSE) == pytest.approx(
        math.log(2), abs=1e-12)
    assert oracle_capacity(useless_channel(2, 2), COARSE) == pytest.approx(
        0.0, abs=1e-12)


def test_oracle_zero_rate_threshold():
    assert oracle_zero_rate_threshold(bsc(0.1), COARSE) == 0.0
    assert oracle_zero_rate_threshold(identity_channel(2), COARSE) == \
        pytest.approx(math.log(2), abs=1e-12)


def test_oracle_strong_converse_identity():
    W = identity_channel(2)
    for R in (0.0, 0.4, 0.9, 1.2):
        assert oracle_strong_converse(R, W, COARSE) == pytest.approx(
            max(R - math.log(2), 0.0), abs=5e-3)


def test_oracle_strong_converse_useless_is_rate():
    W = useless_channel(2, 2)
    for R in (0.0, 0.3, 0.8):
        assert oracle_strong_converse(R, W, COARSE) == pytest.approx(R, abs=1e-9)


def test_oracle_dk_matches_strong_converse_form():
    # the two oracle routes bound the same quantity; on a coarse shared grid
    # they agree to grid resolution
    W = bsc(0.2)
    for R in (0.2, 0.5, 0.8, 1.1):
        a = oracle_strong_converse(R, W, COARSE)
        b = oracle_dk_exponent(R, W, COARSE)
        assert a == pytest.approx(b, abs=2e-2)


def test_oracle_error_exponent_structure():
    W = bsc(0.1)
    cap = math.log(2) - _hb(0.1)
    assert oracle_error_exponent(cap + 0.1, W, COARSE) <= 1e-9
    assert oracle_error_exponent(0.05, W, COARSE) > 1e-3
    assert oracle_error_exponent(0.1, identity_channel(2), COARSE) == math.inf
    assert oracle_sphere_packing_err(0.1, identity_channel(2), COARSE) == math.inf


def test_oracle_sphere_packing_sc_feasibility():
    W = identity_channel(2)
    # rates below ln 2 are feasible with V = W, giving zero divergence
    assert oracle_sphere_packing_sc(0.4, W, COARSE) == pytest.approx(0.0, abs=1e-12)
    # the useless channel: the auxiliary channel is free, so rates up to
    # ln 2 stay feasible at a positive divergence cost; the optimum is
    # attained by symmetric binary rows and is near R itself here
    v = oracle_sphere_packing_sc(0.5, useless_channel(2, 2), COARSE)
    assert 0.4 < v < 0.6
    # but no auxiliary channel on a binary input reaches rate above ln 2
    assert oracle_sphere_packing_sc(0.695, useless_channel(2, 2), COARSE) == math.inf


def test_oracle_tilde_g_line_structure():
    # oracle tilde_g(delta, R) = -delta R + oracle k(delta)
    W = bsc(0.2)
    for d in (-1.0, -0.5, -0.1):
        k = oracle_k_delta(d, W, COARSE)
        for R in (0.1, 0.6):
            assert oracle_tilde_g_delta(d, R, W, COARSE) == pytest.approx(
                -d * R + k, abs=1e-12)


def test_oracle_config_validation():
    with pytest.raises(Exception):
        OracleConfig(p_resolution=0, v_resolution=10, delta_step=1e-2,
                     delta_cap=8.0)
