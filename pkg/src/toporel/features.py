"""Admittance-matrix features and group-wise min-max scaling.

Layouts for an n-bus case:

``full``     [triu(G); triu(B); Pd; Qd; Pgmax], triangles include the diagonal
             and are read row by row: n(n+1)/2 * 2 + 3n = n(n+4) entries.
``partial``  [diag(G); diag(B); Pd; Qd; Pgmax]: 5n entries.

The raw arrangement ``[G, B, Pd, Qd, Pgmax]`` (n x (2n+3)) is exposed as
``raw_matrix`` only; it is never fed to a model.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GridCase
from .network import build_ybus

__all__ = [
    "SCHEMES",
    "GROUPS",
    "FeatureVector",
    "Normalizer",
    "bus_vectors",
    "raw_matrix",
    "extract",
    "feature_length",
    "group_slices",
    "fit_normalizer",
    "apply_normalizer",
]

SCHEMES = ("full", "partial")
GROUPS = ("G", "B", "Pd", "Qd", "Pgmax")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    scheme: str
    values: np.ndarray
    n: int

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.n == other.n
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def feature_length(scheme: str, n: int) -> int:
    if scheme == "full":
        return n * (n + 4)
    if scheme == "partial":
        return 5 * n
    raise ValueError(f"unknown feature scheme {scheme!r}")


def group_slices(scheme: str, n: int) -> dict[str, slice]:
    tri = n * (n + 1) // 2 if scheme == "full" else n
    if scheme not in SCHEMES:
        raise ValueError(f"unknown feature scheme {scheme!r}")
    edges = np.cumsum([0, tri, tri, n, n, n])
    return {g: slice(int(edges[k]), int(edges[k + 1])) for k, g in enumerate(GROUPS)}


def bus_vectors(case: GridCase) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-bus load P, load Q and installed generating capacity, in bus order."""
    pos = case.bus_index()
    pd = np.array([b.pd for b in case.buses], dtype=float)
    qd = np.array([b.qd for b in case.buses], dtype=float)
    pg = np.zeros(case.n_bus)
    for u in case.units:
        pg[pos[u.bus_id]] += u.pmax
    return pd, qd, pg


def raw_matrix(case: GridCase) -> np.ndarray:
    y = build_ybus(case)
    pd, qd, pg = bus_vectors(case)
    return np.column_stack([y.g, y.b, pd, qd, pg])


def extract(case: GridCase, scheme: str = "full") -> FeatureVector:
    y = build_ybus(case)
    pd, qd, pg = bus_vectors(case)
    n = case.n_bus
    if scheme == "full":
        iu = np.triu_indices(n)
        parts = [y.g[iu], y.b[iu]]
    elif scheme == "partial":
        parts = [np.diag(y.g).copy(), np.diag(y.b).copy()]
    else:
        raise ValueError(f"unknown feature scheme {scheme!r}")
    return FeatureVector(scheme, np.concatenate(parts + [pd, qd, pg]), n)


@dataclass(frozen=True)
class Normalizer:
    scheme: str
    n: int
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Scale rows of a feature matrix; constant groups map to 0, no clipping."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != feature_length(self.scheme, self.n):
            raise ValueError(
                f"feature length {X.shape[-1]} does not match {self.scheme} layout for n={self.n}"
            )
        out = np.empty_like(X)
        for k, sl in enumerate(group_slices(self.scheme, self.n).values()):
            lo, hi = self.mins[k], self.maxs[k]
            if hi > lo:
                out[..., sl] = (X[..., sl] - lo) / (hi - lo)
            else:
                out[..., sl] = 0.0
        return out

    def to_record(self) -> dict:
        return {"scheme": self.scheme, "n": self.n, "mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_record(cls, rec: dict) -> "Normalizer":
        return cls(rec["scheme"], int(rec["n"]), tuple(rec["mins"]), tuple(rec["maxs"]))


def fit_normalizer(training: Sequence[FeatureVector]) -> Normalizer:
    if not training:
        raise ValueError("cannot fit a normalizer on an empty training set")
    scheme, n = training[0].scheme, training[0].n
    for fv in training:
        if fv.scheme != scheme or fv.n != n:
            raise ValueError(
                f"mixed feature layouts: {scheme}/n={n} and {fv.scheme}/n={fv.n}"
            )
    X = np.stack([fv.values for fv in training])
    mins, maxs = [], []
    for sl in group_slices(scheme, n).values():
        mins.append(float(X[:, sl].min()))
        maxs.append(float(X[:, sl].max()))
    return Normalizer(scheme, n, tuple(mins), tuple(maxs))


def apply_normalizer(norm: Normalizer, fv: FeatureVector) -> FeatureVector:
    if fv.scheme != norm.scheme or fv.n != norm.n:
        raise ValueError(
            f"normalizer fitted on {norm.scheme}/n={norm.n}, got {fv.scheme}/n={fv.n}"
        )
    return FeatureVector(fv.scheme, norm.transform(fv.values), fv.n)
