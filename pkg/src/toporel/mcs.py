"""Non-sequential Monte Carlo estimation of LOLP with a coefficient-of-variation stop.

Randomness is counter based: replica ``j`` draws its unit uniforms from
block ``j // BLOCK`` of a Philox stream keyed by the run seed, and each block
owns its own counter range.  A block's numbers therefore do not depend on
which blocks were generated before it or on who generates it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import GridCase
from .state_test import CopperPlateTester, SystemState, TesterError, make_tester

__all__ = [
    "McsConfig",
    "McsResult",
    "BLOCK",
    "philox_key",
    "block_uniforms",
    "sample_state",
    "run_mcs",
    "beta_value",
]

BLOCK = 512


@dataclass(frozen=True)
class McsConfig:
    beta_threshold: float = 0.02
    max_iterations: int = 4000
    seed: int = 0
    tester: str = "dc"

    def __post_init__(self):
        if not self.beta_threshold > 0:
            raise ValueError("beta_threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class McsResult:
    lolp: float
    var_f: float
    beta: float
    iterations: int
    converged_by_beta: bool
    failures: int = 0

    @classmethod
    def from_counts(cls, failures: int, n: int, converged_by_beta: bool = False) -> "McsResult":
        p = failures / n
        return cls(
            lolp=p,
            var_f=p * (1.0 - p),
            beta=beta_value(failures, n),
            iterations=n,
            converged_by_beta=converged_by_beta,
            failures=failures,
        )

    def to_record(self) -> dict:
        return {
            "lolp": self.lolp,
            "var_f": self.var_f,
            "beta": None if math.isinf(self.beta) else self.beta,
            "iterations": self.iterations,
            "converged_by_beta": self.converged_by_beta,
            "failures": self.failures,
        }


def beta_value(failures: int, n: int) -> float:
    """sqrt(Var[F]/N) / E[F] for a 0/1 indicator stream; +inf while the sample variance is zero."""
    return kernels.beta_value(failures, n)


def philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed) & (2**64 - 1)).generate_state(2, dtype=np.uint64)


def block_uniforms(key: np.ndarray, block: int, n_units: int, rows: int = BLOCK) -> np.ndarray:
    """Uniforms for replicas ``block*BLOCK ...``: one row per replica, one column per unit."""
    counter = np.array([0, block, 0, 0], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
    return gen.random((rows, n_units))


def sample_state(rng: np.random.Generator, units) -> SystemState:
    """Draw one state; unit ``u`` is down with probability ``for_rate``."""
    for_rate = np.array([u.for_rate for u in units], dtype=float)
    draws = rng.random(len(for_rate))
    return SystemState(tuple(bool(v) for v in draws >= for_rate))


def run_mcs(case: GridCase, config: McsConfig, tester=None) -> McsResult:
    """Estimate LOLP for ``case``; stops when beta < threshold or at max_iterations."""
    if tester is None:
        tester = make_tester(case, config.tester)
    for_rate = np.array([u.for_rate for u in case.units], dtype=float)
    m = len(for_rate)
    key = philox_key(config.seed)
    failures = n = 0
    status = kernels.CONTINUE
    block = 0
    copper = isinstance(tester, CopperPlateTester)
    while status == kernels.CONTINUE:
        u = block_uniforms(key, block, m)
        if copper:
            failures, n, status = kernels.copper_scan(
                u, for_rate, tester.pmax, tester.load, failures, n,
                config.beta_threshold, config.max_iterations,
            )
        else:
            up = u >= for_rate
            try:
                fail = tester.failures(up)
            except TesterError as exc:
                row = getattr(exc, "row", 0)
                down = np.flatnonzero(~up[row]).tolist()
                raise TesterError(f"iteration {n + row + 1}, units down {down}: {exc}") from exc
            failures, n, status = kernels.indicator_scan(
                fail, failures, n, config.beta_threshold, config.max_iterations
            )
        block += 1
    return McsResult.from_counts(failures, n, converged_by_beta=status == kernels.STOP_BETA)
