import math

import numpy as np
import pytest

from dmc_exponents import klform
from dmc_exponents.channel import Distribution, ValidationError
from dmc_exponents.families import (bsc, identity_channel, random_channel,
                                    useless_channel, z_channel)
from dmc_exponents.klform import (ExponentCurve, capacity, dk_exponent,
                                  dk_pointwise, emit_curve, k_delta,
                                  sphere_packing_err, sphere_packing_sc,
                                  tilde_f_delta, tilde_g_delta,
                                  zero_rate_threshold)


def _hb(p: float) -> float:
    return 0.0 if p in (0.0, 1.0) else -p * math.log(p) - (1 - p) * math.log(1 - p)


def test_capacity_closed_forms():
    assert capacity(bsc(0.1)) == pytest.approx(math.log(2) - _hb(0.1), abs=1e-9)
    assert capacity(identity_channel(3)) == pytest.approx(math.log(3), abs=1e-9)
    assert capacity(useless_channel(2, 4)) == pytest.approx(0.0, abs=1e-9)


def test_zero_rate_threshold_cases():
    # strictly positive channel: every output column has full support
    assert zero_rate_threshold(bsc(0.1)) == 0.0
    assert zero_rate_threshold(useless_channel(3, 2)) == 0.0
    assert zero_rate_threshold(identity_channel(2)) == math.log(2)
    assert zero_rate_threshold(identity_channel(3)) == pytest.approx(
        math.log(3), abs=1e-9)
    # Z-channel: output 0 is reachable from both inputs, output 1 only from
    # input 1, so mass can be concentrated to make every column mass <= 1
    # only down to the LP optimum
    assert 0.0 <= zero_rate_threshold(z_channel(0.3)) <= math.log(2) + 1e-12


def test_dk_exponent_identity_channel():
    W = identity_channel(2)
    for R in np.linspace(0.0, 1.4, 15):
        expected = max(float(R) - math.log(2), 0.0)
        assert dk_exponent(float(R), W) == pytest.approx(expected, abs=1e-6)


def test_dk_exponent_useless_channel_is_rate():
    W = useless_channel(2, 2)
    for R in (0.0, 0.25, 0.8):
        assert dk_exponent(R, W) == pytest.approx(R, abs=1e-8)


def test_dk_exponent_at_zero_rate_vanishes():
    rng = np.random.default_rng(3)
    for _ in range(5):
        W = random_channel(3, 3, rng)
        assert abs(dk_exponent(0.0, W)) < 1e-9


def test_dk_pointwise_upper_bounds_optimized():
    rng = np.random.default_rng(4)
    W = random_channel(2, 3, rng)
    for R in (0.3, 0.8):
        full = dk_exponent(R, W)
        for _ in range(4):
            P = Distribution(rng.dirichlet(np.ones(2)))
            assert dk_pointwise(R, P, W) >= full - 1e-6


def test_tilde_f_upper_bounds_over_v_choices():
    # tilde_f is a minimum over auxiliary channels; plugging in V = W gives
    # delta * I(P;W) + 0, an upper bound
    from dmc_exponents.channel import mutual_information
    rng = np.random.default_rng(5)
    for _ in range(5):
        W = random_channel(2, 2, rng)
        P = Distribution(rng.dirichlet(np.ones(2)))
        d, R = float(rng.uniform(-1, 0)), float(rng.uniform(0, 1))
        bound = -d * R + (d * mutual_information(P, W))
        assert tilde_f_delta(d, R, P, W) <= bound + 1e-8


def test_k_delta_endpoints():
    W = bsc(0.1)
    # delta = 0: min over P and V of D(V||W|P) = 0 at V = W
    assert abs(k_delta(0.0, W)) < 1e-10
    with pytest.raises(ValidationError):
        k_delta(0.5, W)
    with pytest.raises(ValidationError):
        k_delta(-1.5, W)


def test_tilde_g_matches_support_line():
    # tilde_g(delta, R) = -delta R - k(delta) by construction, where
    # k(delta) is the maximum of -delta I - D over (P, V)
    W = bsc(0.2)
    for d in (-1.0, -0.6, -0.1):
        k = k_delta(d, W)
        for R in (0.1, 0.5):
            assert tilde_g_delta(d, R, W) == pytest.approx(-d * R - k, abs=1e-9)


def test_sphere_packing_sc_domain_and_infeasibility():
    W = bsc(0.1)
    with pytest.raises(ValidationError):
        sphere_packing_sc(math.log(2) + 0.2, W)
    # below capacity the constraint set has interior and the value is ~0
    assert sphere_packing_sc(0.1, W) < 1e-9
    # identity channel: rates up to ln 2 are feasible with value 0
    assert sphere_packing_sc(0.5, identity_channel(2)) < 1e-9


def test_sphere_packing_err_structure():
    W = bsc(0.1)
    cap = math.log(2) - _hb(0.1)
    assert sphere_packing_err(cap + 0.1, W) == pytest.approx(0.0, abs=1e-9)
    assert sphere_packing_err(0.05, W) > 1e-3
    # below the zero-rate threshold the exponent diverges
    assert sphere_packing_err(0.1, identity_channel(2)) == math.inf


def test_emit_curve_round_trip_and_metadata():
    W = bsc(0.25)
    grid = np.linspace(0.0, 1.0, 6)
    curve = emit_curve("G_dk", W, grid)
    assert isinstance(curve, ExponentCurve)
    assert curve.method_tag == "G_dk"
    assert len(curve.points) == 6
    for (r, v), R in zip(curve.points, grid):
        assert r == pytest.approx(float(R), abs=0.0)
        assert v == pytest.approx(dk_exponent(float(R), W), abs=1e-12)
    with pytest.raises(ValidationError):
        emit_curve("nonsense", W, grid)


def test_solver_cache_determinism():
    W = random_channel(3, 2, np.random.default_rng(9))
    vals1 = [dk_exponent(R, W, seed=2) for R in (0.2, 0.6, 1.1)]
    klform.clear_caches()
    vals2 = [dk_exponent(R, W, seed=2) for R in (0.2, 0.6, 1.1)]
    assert vals1 == vals2
