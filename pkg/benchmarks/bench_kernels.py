"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on the same inputs under both backends; the table reports the
best wall time of ``--repeat`` runs and the speed-up, and the script checks
that both backends return identical results.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from toporel import kernels
from toporel.grid import load_rts79
from toporel.mcs import McsConfig, block_uniforms, philox_key, run_mcs


def _cases(rng):
    rts = load_rts79()
    fr = np.array([u.for_rate for u in rts.units])
    pmax = np.array([u.pmax for u in rts.units])
    load = float(sum(b.pd for b in rts.buses))
    u = block_uniforms(philox_key(0), 0, len(fr))
    fail = rng.random(512) < 0.08

    # normalized-feature scale, like the pipeline's inputs
    X = rng.uniform(size=(100, 120))
    K = X @ X.T
    z = 0.08 + 0.01 * rng.normal(size=100)

    Xs = np.round(rng.normal(size=(600, 120)), 2)
    order = np.ascontiguousarray(np.argsort(Xs, axis=0, kind="stable").T, dtype=np.int64)
    r = rng.normal(size=600)

    return {
        "copper_scan (RTS block)": lambda: kernels.copper_scan(u, fr, pmax, load, 0, 0, 1e-9, 10**9),
        "indicator_scan (512 rows)": lambda: kernels.indicator_scan(fail, 0, 0, 1e-9, 10**9),
        "smo_svr (100 x 100 Gram)": lambda: kernels.smo_svr(K, z, 1.0, 0.001, 1e-9, 10**6),
        "best_stump (600 x 120)": lambda: kernels.best_stump(Xs, order, r),
        "run_mcs RTS copper 4000": lambda: run_mcs(
            rts, McsConfig(beta_threshold=1e-9, max_iterations=4000, tester="copper")).to_record(),
    }


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; only the Python kernels are available")
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':28s}" + "".join(f"{b:>12s}" for b in backends) + "   speed-up  identical")
    for name, fn in cases.items():
        times, outs = [], []
        for b in backends:
            with kernels.use_backend(b):
                t, out = _best(fn, args.repeat)
            times.append(t)
            outs.append(out)
        ratio = times[backends.index("python")] / times[backends.index("compiled")] if len(times) > 1 else 1.0
        same = all(_same(outs[0], o) for o in outs[1:])
        print(f"{name:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + f"   {ratio:7.1f}x  {same}", flush=True)


if __name__ == "__main__":
    main()
