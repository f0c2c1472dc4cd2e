import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toporel.grid import load_rts79
from toporel.state_test import (
    CopperPlateTester,
    DcFeasibilityTester,
    SystemState,
    TesterError as LpFailure,
    Verdict,
    make_tester,
    test_copper_plate as copper_verdict,
    test_dc_feasibility as dc_verdict,
)
from oracles import dc_feasible_oracle
from toys import make_case, ring4_dc, single_bus_fleet, triangle_dc, two_bus

R, F = Verdict.RELIABLE, Verdict.FAILURE


def test_copper_examples():
    case = make_case([(1, 0.0), (2, 120.0)], [(1, 2, 0.1)], [(1, 100.0), (2, 50.0)])
    assert copper_verdict(case, SystemState((True, True))) is R
    assert copper_verdict(case, SystemState((False, True))) is F
    empty = make_case([(1, 0.0)], [], [(1, 100.0), (1, 50.0)])
    assert copper_verdict(empty, SystemState((False, False))) is R


def test_copper_boundary_is_reliable():
    case = single_bus_fleet([60.0, 40.0], [0.1, 0.1], 100.0)
    assert copper_verdict(case, SystemState.all_up(case)) is R


def test_dc_two_bus_examples():
    up = SystemState((True,))
    assert dc_verdict(two_bus(rating=80.0), up) is R
    assert dc_verdict(two_bus(rating=50.0), up) is F
    assert dc_verdict(two_bus(rating=60.0), up) is R  # flow exactly at the limit


def test_dc_all_down_positive_load():
    case = triangle_dc()
    assert dc_verdict(case, SystemState((False,) * 4)) is F


def test_state_length_checked():
    with pytest.raises(ValueError):
        copper_verdict(triangle_dc(), SystemState((True,)))


def test_make_tester_rejects_unknown():
    with pytest.raises(ValueError):
        make_tester(triangle_dc(), "ac")


@pytest.mark.parametrize("factory", [triangle_dc, lambda: two_bus(50.0), lambda: two_bus(80.0)])
def test_dc_matches_vertex_oracle_on_every_state(factory):
    case = factory()
    tester = DcFeasibilityTester(case)
    for up in itertools.product((True, False), repeat=len(case.units)):
        assert (not tester.is_failure(np.array(up))) == dc_feasible_oracle(case, up), up


def test_dc_block_equals_rowwise():
    case = ring4_dc()
    states = np.array(list(itertools.product((True, False), repeat=8)))
    block = DcFeasibilityTester(case).failures(states)
    fresh = [DcFeasibilityTester(case).is_failure(s) for s in states]
    assert block.tolist() == fresh


def test_dc_never_reliable_when_copper_fails_rts():
    case = load_rts79()
    dc, cu = DcFeasibilityTester(case), CopperPlateTester(case)
    rng = np.random.default_rng(3)
    up = rng.random((400, 32)) > 0.15
    d, c = dc.failures(up), cu.failures(up)
    assert not np.any(c & ~d)


def _unbounded(case):
    return replace(case, branches=tuple(replace(b, rating=float("inf")) for b in case.branches))


def test_unbounded_ratings_agree_with_copper_rts():
    case = _unbounded(load_rts79())
    dc, cu = DcFeasibilityTester(case), CopperPlateTester(case)
    rng = np.random.default_rng(5)
    up = rng.random((300, 32)) > 0.2
    assert np.array_equal(dc.failures(up), cu.failures(up))


@st.composite
def small_system(draw):
    n_bus = draw(st.integers(2, 4))
    loads = [draw(st.sampled_from([0.0, 10.0, 25.0, 40.0])) for _ in range(n_bus)]
    edges = [(draw(st.integers(1, k)), k + 1) for k in range(1, n_bus)]
    edges += [(a, b) for a, b in draw(st.lists(st.tuples(st.integers(1, n_bus), st.integers(1, n_bus)), max_size=2))
              if a != b]
    branches = [(a, b, draw(st.sampled_from([0.05, 0.1, 0.2])), draw(st.sampled_from([15.0, 30.0, 60.0])))
                for a, b in edges]
    n_units = draw(st.integers(1, 4))
    units = [(draw(st.integers(1, n_bus)), draw(st.sampled_from([10.0, 20.0, 45.0])), 0.1,
              draw(st.sampled_from([0.0, 0.0, 5.0]))) for _ in range(n_units)]
    case = make_case([(k + 1, loads[k]) for k in range(n_bus)], branches, units)
    up = tuple(draw(st.booleans()) for _ in range(n_units))
    return case, up


@settings(max_examples=120, deadline=None)
@given(small_system())
def test_dc_agrees_with_vertex_oracle(sys_up):
    case, up = sys_up
    got = dc_verdict(case, SystemState(up)) is R
    assert got == dc_feasible_oracle(case, up)
    if copper_verdict(case, SystemState(up)) is F:
        assert not got


@settings(max_examples=60, deadline=None)
@given(small_system(), st.randoms())
def test_verdict_invariant_under_unit_permutation(sys_up, rnd):
    case, up = sys_up
    perm = list(range(len(case.units)))
    rnd.shuffle(perm)
    shuffled = replace(case, units=tuple(case.units[k] for k in perm))
    up2 = tuple(up[k] for k in perm)
    assert dc_verdict(case, SystemState(up)) == dc_verdict(shuffled, SystemState(up2))
    assert copper_verdict(case, SystemState(up)) == copper_verdict(shuffled, SystemState(up2))


def test_iteration_limit_is_an_error_not_a_verdict():
    tester = DcFeasibilityTester(triangle_dc(), max_lp_iterations=0)
    with pytest.raises(LpFailure, match="iteration limit") as info:
        tester.failures(np.ones((3, 4), dtype=bool))
    assert info.value.row == 0


def test_dc_requires_connected_case():
    case = triangle_dc()
    broken = replace(case, branches=case.branches[:1])
    with pytest.raises(ValueError):
        DcFeasibilityTester(broken)
