"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
implementations in ``_core_py`` take over.  ``use_backend`` switches at runtime
(benchmarks and the backend-agreement tests rely on it).
"""
from __future__ import annotations

from . import _core_py

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

CONTINUE, STOP_BETA, STOP_MAX_ITER = _core_py.CONTINUE, _core_py.STOP_BETA, _core_py.STOP_MAX_ITER

_BACKENDS = {"python": _core_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active = _compiled if _compiled is not None else _core_py


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


class use_backend:
    """Switch the active backend; as a context manager, restore the previous one on exit."""

    def __init__(self, name: str):
        global _active
        try:
            new = _BACKENDS[name]
        except KeyError:
            raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None
        self._previous = _active
        _active = new

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        global _active
        _active = self._previous
        return False


def beta_value(failures, n):
    return _core_py.beta_value(failures, n)


def copper_scan(u, for_rate, pmax, load, failures, n, beta_thr, max_iter):
    return _active.copper_scan(u, for_rate, pmax, float(load), int(failures), int(n),
                               float(beta_thr), int(max_iter))


def indicator_scan(fail, failures, n, beta_thr, max_iter):
    return _active.indicator_scan(fail, int(failures), int(n), float(beta_thr), int(max_iter))


def smo_svr(K, z, C, eps, tol, max_iter):
    return _active.smo_svr(K, z, float(C), float(eps), float(tol), int(max_iter))


def best_stump(X, order, r):
    return _active.best_stump(X, order, r)
