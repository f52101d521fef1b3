"""End-to-end acceptance battery.

Each criterion prints exactly one summary line:

    [criterion N] PASS/FAIL <details>

Heavy intermediate results (both exponent stacks evaluated over the shared
corpus) are computed lazily once and reused; the wall-clock budget for a
criterion is charged when its data is first computed, i.e. in the criterion
that owns it.
"""

import itertools
import math
import time

import numpy as np
import pytest

from dmc_exponents import gallager, klform, oracle, verifier
from dmc_exponents.channel import Distribution
from dmc_exponents.cli import main as cli_main
from dmc_exponents.families import bsc, identity_channel, random_channel
from dmc_exponents.verifier import builtin_corpus, err_rate_grid, sc_rate_grid

ACCEPT_SEED = 7
CROSS_TOL = 1e-3
SHAPE_TOL = 1e-6
ORACLE_TOL = 2e-2

_cache: dict = {}


def _report(n: int, ok: bool, detail: str):
    print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {n}: {detail}"


def _corpus():
    """50 seeded random channels with alphabet sizes in {2,3,4}, entries
    kept above 1e-3 so every random channel is strictly positive, plus the
    builtin families."""
    if "corpus" not in _cache:
        rng = np.random.default_rng(ACCEPT_SEED)
        sizes = [(nx, ny) for nx in (2, 3, 4) for ny in (2, 3, 4)]
        chans = []
        for i in range(50):
            nx, ny = sizes[i % len(sizes)]
            chans.append((f"random:{nx}x{ny}:{i}",
                          random_channel(nx, ny, rng, min_entry=1e-3)))
        _cache["corpus"] = chans + builtin_corpus()
    return _cache["corpus"]


def _sc_data():
    """Both strong-converse stacks over the shared rate grids."""
    if "sc" not in _cache:
        t0, c0 = time.perf_counter(), time.process_time()
        data = {}
        for name, W in _corpus():
            grid = sc_rate_grid(W)
            g = np.array([gallager.strong_converse_exponent(float(R), W)
                          for R in grid])
            gdk = np.array([klform.dk_exponent(float(R), W) for R in grid])
            data[name] = (W, grid, g, gdk)
        _cache["sc"] = data
        _cache["sc_elapsed"] = (time.perf_counter() - t0,
                                time.process_time() - c0)
    return _cache["sc"], _cache["sc_elapsed"]


def _err_data():
    """Both error-exponent stacks over the strictly positive sub-corpus."""
    if "err" not in _cache:
        t0 = time.perf_counter()
        data = {}
        for name, W in _corpus():
            if not (W.matrix > 0.0).all():
                continue
            grid = err_rate_grid(W)
            e = np.array([gallager.error_exponent(float(R), W) for R in grid])
            esp = np.array([klform.sphere_packing_err(float(R), W)
                            for R in grid])
            data[name] = (W, grid, e, esp)
        _cache["err"] = data
        _cache["err_elapsed"] = time.perf_counter() - t0
    return _cache["err"], _cache["err_elapsed"]


def _dev(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return math.inf
    return abs(a - b)


def test_criterion_1_theorem3_equivalence():
    data, (wall, cpu) = _sc_data()
    worst, worst_name = 0.0, ""
    for name, (W, grid, g, gdk) in data.items():
        d = float(np.max(np.abs(g - gdk)))
        if d > worst:
            worst, worst_name = d, name
    # the single-core budget is charged as process CPU time; wall clock on
    # a contended host can run several times slower for the same work
    ok = worst <= CROSS_TOL and cpu <= 600.0
    _report(1, ok, f"worst |G - G_dk| = {worst:.3e} at {worst_name} "
                   f"(tol {CROSS_TOL:g}), cpu {cpu:.1f}s / wall {wall:.1f}s "
                   f"(budget 600s single-core), {len(data)} channels x 21 rates")


def test_criterion_2_theorem4_equivalence():
    data, elapsed = _err_data()
    worst, worst_name = 0.0, ""
    for name, (W, grid, e, esp) in data.items():
        d = max(_dev(a, b) for a, b in zip(e, esp))
        if d > worst:
            worst, worst_name = d, name
    ok = worst <= CROSS_TOL
    _report(2, ok, f"worst |E - E_sp| = {worst:.3e} at {worst_name} "
                   f"(tol {CROSS_TOL:g}; joint divergence counts as agreement), "
                   f"elapsed {elapsed:.1f}s, {len(data)} strictly positive channels")


def test_criterion_3_oracle_certification():
    t0, c0 = time.perf_counter(), time.process_time()
    rng = np.random.default_rng(ACCEPT_SEED + 1)
    cfg = oracle.DEFAULT_ORACLE_CONFIG
    worst, worst_tag = 0.0, ""
    for i in range(10):
        W = random_channel(2, 2, rng, min_entry=1e-3)
        grid = sc_rate_grid(W)
        # the constrained-form oracle is only reliable strictly inside the
        # feasible-rate domain: near the ln2 boundary the auxiliary grid's
        # achievable mutual-information values thin out (near-deterministic
        # rows jump in steps of ~1/160), overestimating the constrained
        # minimum by far more than the comparison tolerance
        sp_grid = grid[grid <= 0.85 * math.log(2)]
        pairs = []
        for R in grid:
            R = float(R)
            pairs.append((f"G@{R:.3f}", gallager.strong_converse_exponent(R, W),
                          oracle.oracle_strong_converse(R, W, cfg)))
            pairs.append((f"G_dk@{R:.3f}", klform.dk_exponent(R, W),
                          oracle.oracle_dk_exponent(R, W, cfg)))
        for R in sp_grid:
            R = float(R)
            pairs.append((f"G_sp@{R:.3f}", klform.sphere_packing_sc(R, W),
                          oracle.oracle_sphere_packing_sc(R, W, cfg)))
        for R in err_rate_grid(W):
            R = float(R)
            pairs.append((f"E@{R:.3f}", gallager.error_exponent(R, W),
                          oracle.oracle_error_exponent(R, W, cfg)))
            pairs.append((f"E_sp@{R:.3f}", klform.sphere_packing_err(R, W),
                          oracle.oracle_sphere_packing_err(R, W, cfg)))
        for tag, prod, orc in pairs:
            d = _dev(prod, orc)
            if d > worst:
                worst, worst_tag = d, f"channel {i} {tag}"
        oracle.clear_oracle_caches()  # drop the per-channel tables
    wall = time.perf_counter() - t0
    cpu = time.process_time() - c0
    # single-core budget charged as process CPU time (see criterion 1)
    ok = worst <= ORACLE_TOL and cpu <= 300.0
    _report(3, ok, f"worst production-vs-oracle deviation = {worst:.3e} at "
                   f"{worst_tag} (tol {ORACLE_TOL:g}), cpu {cpu:.1f}s / "
                   f"wall {wall:.1f}s (budget 300s single-core)")


def test_criterion_4_lipschitz():
    data, _ = _sc_data()
    worst, worst_name = -math.inf, ""
    for name, (W, grid, g, gdk) in data.items():
        for i, j in itertools.combinations(range(grid.size), 2):
            excess = abs(gdk[i] - gdk[j]) - abs(grid[i] - grid[j])
            if excess > worst:
                worst, worst_name = excess, name
    ok = worst <= SHAPE_TOL
    _report(4, ok, f"worst Lipschitz excess of G_dk = {worst:.3e} at "
                   f"{worst_name} (tol {SHAPE_TOL:g}, all rate pairs)")


def _monotone_excess(vals: np.ndarray, increasing: bool) -> float:
    finite = vals[np.isfinite(vals)]
    diffs = np.diff(finite)
    if increasing:
        return float(max(0.0, -diffs.min(initial=0.0)))
    return float(max(0.0, diffs.max(initial=0.0)))


def _midpoint_convexity_excess(vals: np.ndarray) -> float:
    worst = 0.0
    for i in range(1, len(vals) - 1):
        trio = vals[i - 1:i + 2]
        if np.all(np.isfinite(trio)):
            worst = max(worst, float(trio[1] - 0.5 * (trio[0] + trio[2])))
    return worst


def test_criterion_5_shape():
    data, _ = _sc_data()
    err, _ = _err_data()
    worst, worst_tag = 0.0, ""

    def track(v, tag):
        nonlocal worst, worst_tag
        if v > worst:
            worst, worst_tag = v, tag

    for name, (W, grid, g, gdk) in data.items():
        track(_monotone_excess(gdk, increasing=True), f"{name} G_dk monotone")
        track(_midpoint_convexity_excess(gdk), f"{name} G_dk convexity")
        cap = klform.capacity(W)
        step = float(grid[1] - grid[0])
        # positivity thresholds of both one-sided curves sit at capacity
        for tag, vals in (("G", g), ("G_sp_thresh", None)):
            if vals is None:
                sp_grid = grid[grid <= math.log(W.input_size) + 1e-12]
                vals = np.array([klform.sphere_packing_sc(float(R), W)
                                 for R in sp_grid])
                track(_monotone_excess(vals, increasing=True),
                      f"{name} G_sp monotone")
                track(_midpoint_convexity_excess(vals), f"{name} G_sp convexity")
                gvals, gg = sp_grid, vals
            else:
                gvals, gg = grid, vals
            # positivity detection cutoff sits well above optimizer noise
            # (~1e-6) while keeping the implied threshold shift far below
            # a grid step
            pos = np.flatnonzero(gg > 50.0 * SHAPE_TOL)
            if pos.size:
                thresh = float(gvals[pos[0]])
                # the curve vanishes quadratically at capacity, so on a
                # grid the positivity cutoff may only trip at the second
                # grid point above capacity; measure the delay from the
                # first grid point at/above capacity
                above = gvals[gvals >= cap]
                cap_grid = float(above[0]) if above.size else cap
                track(max(0.0, thresh - cap_grid - step, cap - thresh),
                      f"{name} {tag} threshold")
            elif cap < float(gvals[-1]) - step:
                track(math.inf, f"{name} {tag} never positive")

    for name, (W, grid, e, esp) in err.items():
        cap = klform.capacity(W)
        keep = grid <= cap + 1e-9
        vals = esp[keep]
        # divergence is only allowed at the low-rate end
        finite_mask = np.isfinite(vals)
        if finite_mask.any():
            first_finite = int(np.argmax(finite_mask))
            if not finite_mask[first_finite:].all():
                track(math.inf, f"{name} E_sp interior divergence")
        track(_monotone_excess(vals, increasing=False), f"{name} E_sp monotone")
        track(_midpoint_convexity_excess(vals), f"{name} E_sp convexity")
        # above capacity the error exponent vanishes
        step = float(grid[1] - grid[0])
        tail = esp[grid >= cap + step]
        if tail.size:
            track(float(np.max(tail, initial=0.0)), f"{name} E_sp tail")

    ok = worst <= SHAPE_TOL
    _report(5, ok, f"worst shape violation = {worst:.3e} at {worst_tag} "
                   f"(tol {SHAPE_TOL:g}: monotonicity, midpoint convexity, "
                   f"capacity thresholds)")


def test_criterion_6_exact_zeros():
    rng = np.random.default_rng(ACCEPT_SEED + 2)
    worst, worst_tag = 0.0, ""
    for i in range(100):
        nx, ny = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        W = random_channel(nx, ny, rng)
        P = Distribution(rng.dirichlet(np.ones(nx)))
        R = float(rng.uniform(0.0, 1.0))
        for tag, v in (("J0", gallager.gallager_j(0.0, P, W)),
                       ("F0", gallager.f_delta(0.0, R, P, W)),
                       ("G0", gallager.g_delta(0.0, R, W)),
                       ("E0", gallager.e_delta(0.0, R, W)),
                       ("tilde_F0", klform.tilde_f_delta(0.0, R, P, W)),
                       ("tilde_E0", klform.tilde_e_delta(0.0, R, W))):
            if abs(v) > worst:
                worst, worst_tag = abs(v), f"sample {i} {tag}"
    zero_rate_worst = 0.0
    for name, W in _corpus():
        zero_rate_worst = max(zero_rate_worst, abs(klform.dk_exponent(0.0, W)))
    ok = worst <= 1e-12 and zero_rate_worst <= 1e-9
    _report(6, ok, f"worst delta=0 residual = {worst:.2e} at {worst_tag} "
                   f"(tol 1e-12, 100 samples); worst G_dk(0) = "
                   f"{zero_rate_worst:.2e} (tol 1e-9)")


def test_criterion_7_capacity_closed_form():
    worst = 0.0
    for p in np.arange(0.0, 0.5001, 0.05):
        p = round(float(p), 2)
        hb = 0.0 if p in (0.0,) else -p * math.log(p) - (1 - p) * math.log(1 - p)
        worst = max(worst, abs(klform.capacity(bsc(p)) - (math.log(2) - hb)))
    exact_ok = (klform.zero_rate_threshold(bsc(0.1)) == 0.0
                and klform.zero_rate_threshold(bsc(0.45)) == 0.0
                and klform.zero_rate_threshold(identity_channel(2))
                == math.log(2))
    ok = worst <= 1e-8 and exact_ok
    _report(7, ok, f"worst |capacity(BSC(p)) - (ln2 - Hb(p))| = {worst:.2e} "
                   f"(tol 1e-8); zero-rate threshold exact: {exact_ok}")


def test_criterion_8_identity_channel_curve():
    W = identity_channel(2)
    worst = 0.0
    for R in np.linspace(0.0, 1.4, 29):
        R = float(R)
        expected = max(R - math.log(2), 0.0)
        worst = max(worst,
                    abs(gallager.strong_converse_exponent(R, W) - expected),
                    abs(klform.dk_exponent(R, W) - expected))
    ok = worst <= CROSS_TOL
    _report(8, ok, f"worst |curve - [R - ln2]+| = {worst:.2e} on the binary "
                   f"identity channel (tol {CROSS_TOL:g})")


def test_criterion_9_pointwise_inequality_and_2x2_equality():
    rng = np.random.default_rng(ACCEPT_SEED + 3)
    worst_gap = -math.inf
    for _ in range(1000):
        nx, ny = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        W = random_channel(nx, ny, rng)
        P = Distribution(rng.dirichlet(np.ones(nx)))
        d = float(rng.uniform(-1.0, 0.0))
        R = float(rng.uniform(0.0, 1.5))
        gap = gallager.f_delta(d, R, P, W) - klform.tilde_f_delta(d, R, P, W)
        worst_gap = max(worst_gap, gap)
    two_by_two = [(n, W) for n, W in _corpus() if W.matrix.shape == (2, 2)]
    worst_eq, worst_tag = 0.0, ""
    for name, W in two_by_two:
        for d in np.round(np.linspace(-1.0, 0.0, 11), 12):
            d = float(d)
            dev = abs(klform.tilde_g_delta(d, 0.4, W)
                      - gallager.g_delta(d, 0.4, W))
            if dev > worst_eq:
                worst_eq, worst_tag = dev, f"{name} delta={d:g}"
    ok = worst_gap <= 1e-8 and worst_eq <= 1e-4
    _report(9, ok, f"worst F - tilde_F = {worst_gap:.2e} over 1000 samples "
                   f"(tol 1e-8); worst |tilde_G - G_delta| = {worst_eq:.2e} "
                   f"at {worst_tag} on {len(two_by_two)} binary channels "
                   f"(tol 1e-4)")


def test_criterion_10_deterministic_reports(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--sizes", "2x2", "--count", "2", "--no-builtins",
            "--seed", "11"]
    code_a = cli_main(args + ["-o", str(a)])
    code_b = cli_main(args + ["-o", str(b)])
    identical = a.read_bytes() == b.read_bytes()
    ok = identical and code_a == code_b == 0
    _report(10, ok, f"two seeded verify runs byte-identical: {identical}, "
                    f"exit codes {code_a}/{code_b}, report "
                    f"{len(a.read_bytes())} bytes")
