"""Exact enumeration of generator-outage states truncated at a given outage order.

Enumerating every outage set of size <= k gives a lower bound on LOLP (the
failure probability seen so far) and an upper bound that adds the
probability mass of the states left out.  At full order both bounds meet at
the exact LOLP.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .grid import GridCase
from .state_test import make_tester

__all__ = ["LolpBounds", "EnumerationBudgetError", "enumerate_lolp", "state_count", "outage_probability"]

DEFAULT_BUDGET = 2_000_000


class EnumerationBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class LolpBounds:
    lower: float
    upper: float
    truncated_mass: float
    states: int = 0

    def to_record(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "truncated_mass": self.truncated_mass,
            "states": self.states,
        }


def state_count(n_units: int, max_order: int) -> int:
    return sum(comb(n_units, k) for k in range(max_order + 1))


def outage_probability(for_rate: np.ndarray, down: tuple[int, ...]) -> float:
    """P(exactly the units in ``down`` are out) under independent two-state units."""
    p = 1.0
    out = set(down)
    for u, q in enumerate(for_rate):
        p *= q if u in out else 1.0 - q
    return float(p)


def enumerate_lolp(
    case: GridCase,
    tester="copper",
    max_order: int = 3,
    budget: int = DEFAULT_BUDGET,
    memo: dict | None = None,
) -> LolpBounds:
    """LOLP bounds from all outage sets of size <= ``max_order``.

    ``tester`` is a tester kind or an instance.  Pass the same ``memo`` dict
    across calls to reuse verdicts when tightening the order.
    """
    m = len(case.units)
    if not 0 <= max_order <= m:
        raise ValueError(f"max_order must lie in [0, {m}], got {max_order}")
    total_states = state_count(m, max_order)
    if total_states > budget:
        raise EnumerationBudgetError(
            f"{total_states} outage sets up to order {max_order} exceed the budget of {budget}"
        )
    if isinstance(tester, str):
        tester = make_tester(case, tester)
    if memo is None:
        memo = {}
    for_rate = np.array([u.for_rate for u in case.units], dtype=float)

    lower = 0.0
    covered = 0.0
    for k in range(max_order + 1):
        for down in combinations(range(m), k):
            p = outage_probability(for_rate, down)
            covered += p
            failed = memo.get(down)
            if failed is None:
                up = np.ones(m, dtype=bool)
                up[list(down)] = False
                failed = bool(tester.is_failure(up))
                memo[down] = failed
            if failed:
                lower += p
    truncated = 0.0 if max_order == m else max(0.0, 1.0 - covered)
    return LolpBounds(lower=lower, upper=lower + truncated, truncated_mass=truncated, states=total_states)
