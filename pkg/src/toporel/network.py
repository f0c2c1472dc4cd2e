"""Admittance matrix assembly, topology changes and graph connectivity."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .grid import GridCase

__all__ = [
    "AdmittanceMatrix",
    "TopologyChange",
    "build_ybus",
    "apply_change",
    "is_connected",
    "find_bridges",
    "dc_susceptance",
]


@dataclass(frozen=True)
class AdmittanceMatrix:
    g: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class TopologyChange:
    """Set of branch indices taken out for planned maintenance."""

    removed: frozenset[int] = frozenset()

    def __init__(self, removed: Iterable[int] = ()):
        items = list(removed)
        if len(set(items)) != len(items):
            raise ValueError(f"duplicate branch index in {items}")
        object.__setattr__(self, "removed", frozenset(int(i) for i in items))

    @property
    def order(self) -> int:
        return len(self.removed)

    def sorted(self) -> tuple[int, ...]:
        return tuple(sorted(self.removed))


def build_ybus(case: GridCase) -> AdmittanceMatrix:
    """Assemble the bus admittance matrix and return its real/imaginary parts."""
    pos = case.bus_index()
    n = case.n_bus
    y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        if br.r == 0 and br.x == 0:
            raise ValueError(f"branch {br.index} has zero impedance")
        ys = 1.0 / complex(br.r, br.x)
        f, t = pos[br.from_bus], pos[br.to_bus]
        ysh = 0.5j * br.b_shunt
        y[f, f] += ys + ysh
        y[t, t] += ys + ysh
        y[f, t] -= ys
        y[t, f] -= ys
    return AdmittanceMatrix(g=y.real.copy(), b=y.imag.copy())


def dc_susceptance(case: GridCase) -> np.ndarray:
    """DC power-flow matrix built from 1/x per branch (no shunts, no resistance)."""
    pos = case.bus_index()
    n = case.n_bus
    bp = np.zeros((n, n))
    for br in case.branches:
        f, t = pos[br.from_bus], pos[br.to_bus]
        s = 1.0 / br.x
        bp[f, f] += s
        bp[t, t] += s
        bp[f, t] -= s
        bp[t, f] -= s
    return bp


def apply_change(case: GridCase, change: TopologyChange | Iterable[int]) -> GridCase:
    """Copy of ``case`` with the listed branches deleted."""
    if not isinstance(change, TopologyChange):
        change = TopologyChange(change)
    present = {br.index for br in case.branches}
    unknown = sorted(change.removed - present)
    if unknown:
        raise KeyError(f"unknown branch index {unknown} in case {case.name!r}")
    if not change.removed:
        return case
    kept = tuple(br for br in case.branches if br.index not in change.removed)
    return replace(case, branches=kept)


def _find(parent: list[int], i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def is_connected(case: GridCase) -> bool:
    """True iff buses and branches form a single connected component."""
    n = case.n_bus
    if n == 0:
        return False
    pos = case.bus_index()
    parent = list(range(n))
    components = n
    for br in case.branches:
        a, b = _find(parent, pos[br.from_bus]), _find(parent, pos[br.to_bus])
        if a != b:
            parent[a] = b
            components -= 1
    return components == 1


def find_bridges(case: GridCase) -> set[int]:
    """Branch indices whose sole removal disconnects the graph.

    Iterative low-link DFS keyed on edge identity, so parallel branches
    between the same bus pair are never reported.
    """
    pos = case.bus_index()
    n = case.n_bus
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for br in case.branches:
        f, t = pos[br.from_bus], pos[br.to_bus]
        adj[f].append((t, br.index))
        adj[t].append((f, br.index))

    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # frame: (vertex, edge used to enter it, neighbour iterator position)
        stack = [(root, -1, 0)]
        while stack:
            v, via, k = stack[-1]
            if k < len(adj[v]):
                stack[-1] = (v, via, k + 1)
                w, eid = adj[v][k]
                if eid == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, eid, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridges.add(via)
    return bridges
