import json
import math

import numpy as np
import pytest

from dmc_exponents import verifier
from dmc_exponents.families import bsc, identity_channel, useless_channel
from dmc_exponents.verifier import (CheckResult, VerificationReport,
                                    _deviation, builtin_corpus,
                                    check_shape, check_theorem3,
                                    check_theorem4, corpus_channels,
                                    err_rate_grid, run_corpus, sc_rate_grid)


def test_deviation_infinity_rules():
    assert _deviation(math.inf, math.inf) == 0.0
    assert _deviation(math.inf, 1.0) == math.inf
    assert _deviation(1.0, math.inf) == math.inf
    assert _deviation(1.0, 1.25) == pytest.approx(0.25)


def test_rate_grids():
    W = bsc(0.1)
    g = sc_rate_grid(W)
    assert g[0] == 0.0 and g[-1] == pytest.approx(math.log(2) + 0.5)
    assert g.size == 21
    e = err_rate_grid(W)
    assert e[0] == pytest.approx(0.01)  # zero-rate threshold is 0 here


def test_check_result_serialization():
    r = CheckResult("demo", "abc", True, math.inf, 1e-3,
                    {"vec": np.array([1.0, math.inf]), "n": np.int64(3),
                     "flag": np.bool_(True)})
    d = r.to_dict()
    assert d["pass"] is True
    assert d["worst_deviation"] == "inf"
    assert d["witness"] == {"vec": [1.0, "inf"], "n": 3, "flag": True}
    json.dumps(d)  # must be serializable


def test_report_json_deterministic_and_ordered():
    rep = VerificationReport("demo", 3)
    rep.results.append(CheckResult("a", "x", True, 0.0, 1e-3, {}))
    rep.results.append(CheckResult("b", "x", False, 1.0, 1e-3, {}))
    assert rep.summary == {"total": 2, "passed": 1, "failed": 1}
    assert not rep.all_passed
    assert rep.to_json() == rep.to_json()
    doc = json.loads(rep.to_json())
    assert [c["check_id"] for c in doc["checks"]] == ["a", "b"]


def test_theorem_checks_pass_on_bsc():
    W = bsc(0.25)
    r3 = check_theorem3(W)
    assert r3.passed, r3.witness
    r4 = check_theorem4(W)
    assert r4.passed, r4.witness


def test_shape_checks_pass_on_builtins():
    for tag in ("G_dk", "G", "G_sp"):
        r = check_shape(bsc(0.1), tag)
        assert r.passed, (tag, r.witness)
    r = check_shape(bsc(0.1), "E_sp")
    assert r.passed, r.witness


def test_check_guard_turns_errors_into_failures():
    # a rate grid outside the domain triggers the internal guard rather
    # than propagating an exception
    r = check_shape(identity_channel(2), "G_sp", R_grid=np.array([-1.0, 0.5]))
    assert not r.passed
    assert "error" in r.witness


def test_corpus_is_deterministic():
    a = corpus_channels(5, [(2, 2), (2, 3)], 4)
    b = corpus_channels(5, [(2, 2), (2, 3)], 4)
    assert [n for n, _ in a] == [n for n, _ in b]
    for (_, wa), (_, wb) in zip(a, b):
        np.testing.assert_array_equal(wa.matrix, wb.matrix)
    names = [n for n, _ in a]
    assert any(n.startswith("random:") for n in names)
    assert any(n.startswith("sparse:") for n in names)


def test_builtin_corpus_contents():
    names = [n for n, _ in builtin_corpus()]
    assert "bsc:0.1" in names and "identity:2" in names


def test_run_corpus_empty_is_trivially_passing():
    rep = run_corpus(0, [], 0, include_builtins=False)
    assert rep.summary == {"total": 0, "passed": 0, "failed": 0}
    assert rep.all_passed


def test_run_corpus_on_useless_channel():
    rep = run_corpus(1, [], 0, include_builtins=False,
                     channels=[("useless", useless_channel(2, 2))])
    assert rep.all_passed, rep.to_json()
    # strictly positive channel: error-exponent side checks included
    ids = [r.check_id for r in rep.results]
    assert "theorem3" in ids and "theorem4" in ids
