import math

import numpy as np
import pytest

from toporel import kernels
from toporel.grid import load_rts79
from toporel.mcs import (
    BLOCK,
    McsConfig,
    McsResult,
    beta_value,
    block_uniforms,
    philox_key,
    run_mcs,
    sample_state,
)
from toporel.state_test import CopperPlateTester, DcFeasibilityTester, TesterError as LpFailure
from toys import ACCEPTANCE_TOYS, single_bus_fleet, triangle_dc


def test_sample_state_degenerate():
    case = single_bus_fleet([10.0, 20.0, 30.0], [0.0, 0.0, 0.0], 5.0)
    rng = np.random.default_rng(0)
    assert all(all(sample_state(rng, case.units).unit_up) for _ in range(200))
    case = single_bus_fleet([10.0, 20.0, 30.0], [1.0, 1.0, 1.0], 5.0)
    assert not any(any(sample_state(rng, case.units).unit_up) for _ in range(200))


def test_block_down_frequencies_rts():
    case = load_rts79()
    fr = np.array([u.for_rate for u in case.units])
    key = philox_key(2024)
    n_blocks = -(-100_000 // BLOCK)
    u = np.vstack([block_uniforms(key, b, len(fr)) for b in range(n_blocks)])[:100_000]
    freq = (u < fr).mean(axis=0)
    assert np.all(np.abs(freq - fr) <= 3 * np.sqrt(fr * (1 - fr) / 100_000))


def test_blocks_are_distinct_and_reproducible():
    key = philox_key(1)
    a, b = block_uniforms(key, 0, 4), block_uniforms(key, 1, 4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, block_uniforms(philox_key(1), 0, 4))
    assert not np.array_equal(a, block_uniforms(philox_key(2), 0, 4))


def test_fleet2_near_exact():
    r = run_mcs(ACCEPTANCE_TOYS["fleet2"](), McsConfig(max_iterations=50_000, seed=0, tester="copper"))
    assert abs(r.lolp - 0.19) <= 3 * math.sqrt(r.var_f / r.iterations)


def test_no_failures_ever():
    case = single_bus_fleet([100.0, 100.0], [0.0, 0.0], 150.0)
    r = run_mcs(case, McsConfig(max_iterations=777, tester="copper"))
    assert (r.lolp, r.iterations, r.converged_by_beta) == (0.0, 777, False)
    assert math.isinf(r.beta)
    assert r.to_record()["beta"] is None


def test_hand_arithmetic_4000_320():
    r = McsResult.from_counts(320, 4000)
    assert r.lolp == 0.08
    assert abs(r.var_f - 0.0736) <= 1e-12
    assert abs(r.beta - math.sqrt(0.0736 / 4000) / 0.08) <= 1e-15
    assert round(r.beta, 5) == 0.05362


@pytest.mark.parametrize("p", [0.01, 0.02, 0.05, 0.08, 0.1, 0.2, 0.3, 0.5])
def test_beta_identity_and_monotone(p):
    prev = math.inf
    for n in (100, 400, 1000, 4000, 10000):
        f = round(p * n)
        b = beta_value(f, n)
        assert abs(b - math.sqrt((1 - f / n) / (f / n * n))) <= 1e-12
        assert b < prev
        prev = b


def test_beta_sentinels():
    assert math.isinf(beta_value(0, 10))
    assert math.isinf(beta_value(0, 0))
    # every state failed: zero sample variance is no evidence of convergence
    assert math.isinf(beta_value(5, 5))


def test_all_failing_states_do_not_stop_early():
    case = single_bus_fleet([100.0], [1.0], 50.0)
    r = run_mcs(case, McsConfig(max_iterations=300, tester="copper"))
    assert (r.lolp, r.iterations, r.converged_by_beta) == (1.0, 300, False)


def test_result_invariants():
    r = run_mcs(triangle_dc(), McsConfig(max_iterations=3000, seed=4, tester="dc"))
    assert r.lolp == r.failures / r.iterations
    assert abs(r.var_f - r.lolp * (1 - r.lolp)) <= 1e-12


def _indicator_stream(case, seed, n):
    tester = CopperPlateTester(case)
    fr = np.array([u.for_rate for u in case.units])
    rows = []
    for b in range(-(-n // BLOCK)):
        rows.append(tester.failures(block_uniforms(philox_key(seed), b, len(fr)) >= fr))
    return np.concatenate(rows)[:n]


def test_stop_rule_from_independent_stream():
    case = load_rts79()
    cfg = McsConfig(beta_threshold=0.05, max_iterations=20_000, seed=9, tester="copper")
    r = run_mcs(case, cfg)
    flags = _indicator_stream(case, 9, 20_000)
    f = np.cumsum(flags)
    stop = None
    for n in range(2, 20_001):
        k = int(f[n - 1])
        if 0 < k < n and math.sqrt((k / n) * (1 - k / n) / n) / (k / n) < 0.05:
            stop = n
            break
    assert stop is not None
    assert (r.iterations, r.failures, r.converged_by_beta) == (stop, int(f[stop - 1]), True)


def test_max_iteration_prefix_consistency():
    case = load_rts79()
    flags = _indicator_stream(case, 3, 1500)
    for n in (1, 2, 511, 512, 513, 1500):
        r = run_mcs(case, McsConfig(beta_threshold=1e-9, max_iterations=n, seed=3, tester="copper"))
        assert r.iterations == n
        assert r.failures == int(flags[:n].sum())


def test_dc_and_copper_paths_share_the_stream():
    # with unbounded lines the DC tester reduces to copper, so the runs must match exactly
    from dataclasses import replace
    case = load_rts79()
    free = replace(case, branches=tuple(replace(b, rating=float("inf")) for b in case.branches))
    cfg = McsConfig(beta_threshold=0.04, max_iterations=3000, seed=5)
    a = run_mcs(free, cfg, tester=CopperPlateTester(free))
    b = run_mcs(free, cfg, tester=DcFeasibilityTester(free))
    assert a == b


def test_deterministic_repeat():
    cfg = McsConfig(max_iterations=2000, seed=11, tester="dc")
    assert run_mcs(triangle_dc(), cfg) == run_mcs(triangle_dc(), cfg)


@pytest.mark.parametrize("tester", ["copper", "dc"])
def test_backends_agree(tester):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    cfg = McsConfig(beta_threshold=0.03, max_iterations=6000, seed=21, tester=tester)
    out = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            out[name] = run_mcs(triangle_dc(), cfg)
    assert len(set(out.values())) == 1


def test_tester_error_carries_context():
    case = triangle_dc()
    with pytest.raises(LpFailure, match=r"^iteration \d+, units down \[[\d, ]*\]: LP iteration limit"):
        run_mcs(case, McsConfig(seed=0), tester=DcFeasibilityTester(case, max_lp_iterations=0))


def test_config_validation():
    with pytest.raises(ValueError):
        McsConfig(beta_threshold=0.0)
    with pytest.raises(ValueError):
        McsConfig(max_iterations=0)
