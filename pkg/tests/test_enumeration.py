import math
from itertools import combinations

import numpy as np
import pytest

from toporel.enumeration import (
    EnumerationBudgetError,
    enumerate_lolp,
    outage_probability,
    state_count,
)
from toporel.grid import load_rts79
from oracles import exact_lolp_by_hand
from toys import ACCEPTANCE_TOYS, single_bus_fleet, triangle_dc


def test_two_unit_hand_case():
    b = enumerate_lolp(single_bus_fleet([100.0, 100.0], [0.1, 0.1], 150.0), "copper", 2)
    assert abs(b.lower - 0.19) <= 1e-15
    assert b.upper == b.lower
    assert b.truncated_mass == 0.0


def test_order_zero():
    case = triangle_dc()
    b = enumerate_lolp(case, "dc", 0)
    fr = [u.for_rate for u in case.units]
    assert b.lower == 0.0
    assert abs(b.truncated_mass - (1 - math.prod(1 - q for q in fr))) <= 1e-15
    assert b.upper == b.truncated_mass


def test_zero_for():
    case = single_bus_fleet([50.0, 60.0, 70.0], [0.0, 0.0, 0.0], 100.0)
    for k in range(4):
        b = enumerate_lolp(case, "copper", k)
        assert b.lower == b.upper == 0.0


@pytest.mark.parametrize("name", ["fleet6", "fleet12"])
def test_full_order_matches_hand_enumeration(name):
    case = ACCEPTANCE_TOYS[name]()
    pmax = [u.pmax for u in case.units]
    load = sum(b.pd for b in case.buses)
    exact = exact_lolp_by_hand([u.for_rate for u in case.units],
                               lambda down: sum(p for i, p in enumerate(pmax) if i not in down) < load)
    b = enumerate_lolp(case, "copper", len(case.units))
    assert b.lower == b.upper
    assert abs(b.lower - exact) <= 1e-12


def test_probability_mass_sums_to_one():
    case = load_rts79()
    fr = np.array([u.for_rate for u in case.units])
    for k in range(4):
        mass = sum(outage_probability(fr, d) for j in range(k + 1) for d in combinations(range(32), j))
        b = enumerate_lolp(case, "copper", k)
        assert abs(mass + b.truncated_mass - 1.0) <= 1e-12
        assert abs((b.upper - b.lower) - b.truncated_mass) <= 1e-15


def test_rts_monotone_tightening():
    case = load_rts79()
    memo = {}
    prev = None
    for k in range(4):
        b = enumerate_lolp(case, "copper", k, memo=memo)
        assert 0.0 <= b.lower <= b.upper <= 1.0
        if prev is not None:
            assert b.lower >= prev.lower
            assert b.upper <= prev.upper
        prev = b
    assert prev.states == 5489


def test_state_count():
    assert state_count(32, 3) == 1 + 32 + 496 + 4960


def test_budget_guard():
    with pytest.raises(EnumerationBudgetError):
        enumerate_lolp(load_rts79(), "copper", 3, budget=5000)


def test_max_order_range():
    with pytest.raises(ValueError):
        enumerate_lolp(triangle_dc(), "dc", 5)
