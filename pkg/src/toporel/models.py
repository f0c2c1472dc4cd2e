"""Linear epsilon-SVR, least-squares boosted stumps, and regression error metrics."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .features import Normalizer

__all__ = [
    "SvrModel",
    "Stump",
    "BoostModel",
    "Metrics",
    "train_svr",
    "predict_svr",
    "svr_objective",
    "optimal_bias",
    "train_lsboost",
    "predict_lsboost",
    "staged_mse",
    "compute_metrics",
    "model_to_record",
    "model_from_record",
    "save_model",
    "load_model",
    "MODEL_FORMAT_VERSION",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class SvrModel:
    w: np.ndarray
    b: float
    c: float = 1.0
    epsilon: float = 0.001
    iterations: int = 0

    def predict(self, X) -> np.ndarray:
        return predict_svr(self, X)


@dataclass(frozen=True)
class Stump:
    feature: int  # -1: no split, both leaves equal
    threshold: float
    left: float
    right: float

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.feature < 0:
            return np.full(X.shape[0], self.left)
        return np.where(X[:, self.feature] <= self.threshold, self.left, self.right)


@dataclass(frozen=True)
class BoostModel:
    f0: float
    stages: tuple[tuple[Stump, float], ...] = ()
    shrinkage: float = 1.0

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def predict(self, X) -> np.ndarray:
        return predict_lsboost(self, X)


@dataclass(frozen=True)
class Metrics:
    mape: float
    mae: float
    rmse: float

    def to_record(self) -> dict:
        return {"mape": self.mape, "mae": self.mae, "rmse": self.rmse}


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite value in training data")
    return X, y


# ---------------------------------------------------------------- SVR


def svr_objective(w, b, X, y, c, epsilon) -> float:
    """Primal value 0.5|w|^2 + c * sum of epsilon-insensitive residual excess."""
    r = np.asarray(y, dtype=float) - np.asarray(X, dtype=float) @ np.asarray(w, dtype=float) - b
    slack = np.maximum(0.0, r - epsilon) + np.maximum(0.0, -r - epsilon)
    return 0.5 * float(np.dot(w, w)) + c * float(slack.sum())


def optimal_bias(r: np.ndarray, epsilon: float) -> float:
    """Bias minimising sum(max(0, |r_i - b| - epsilon)); midpoint of the optimal interval."""
    r = np.asarray(r, dtype=float)
    upper = np.sort(r - epsilon)  # b below these costs (upper - b)
    lower = np.sort(r + epsilon)  # b above these costs (b - lower)
    cand = np.unique(np.concatenate([upper, lower]))
    cu = np.concatenate([[0.0], np.cumsum(upper)])
    cl = np.concatenate([[0.0], np.cumsum(lower)])
    n = r.size
    ku = np.searchsorted(upper, cand, side="right")  # count of upper <= b
    kl = np.searchsorted(lower, cand, side="left")   # count of lower < b
    f = (cu[-1] - cu[ku]) - (n - ku) * cand + kl * cand - cl[kl]
    fmin = f.min()
    best = cand[f <= fmin + 1e-12 * (1.0 + abs(fmin))]
    return float(0.5 * (best[0] + best[-1]))


def train_svr(X, y, c: float = 1.0, epsilon: float = 0.001, tol: float = 1e-9,
              max_iter: int = 10_000_000) -> SvrModel:
    """Fit a linear epsilon-SVR by SMO on the dual; the bias is then set exactly."""
    X, y = _check_xy(X, y)
    if not c > 0:
        raise ValueError("c must be positive")
    if not epsilon >= 0:
        raise ValueError("epsilon must be non-negative")
    l = X.shape[0]
    K = X @ X.T
    a, it = kernels.smo_svr(K, y, c, epsilon, tol, max_iter)
    if it >= max_iter:
        warnings.warn(f"SVR solver stopped at max_iter={max_iter} before reaching tol={tol}; "
                      "the objective may be above its optimum (are the features normalized?)",
                      RuntimeWarning, stacklevel=2)
    coef = a[:l] - a[l:]
    w = coef @ X
    b = optimal_bias(y - X @ w, epsilon)
    return SvrModel(w=w, b=b, c=c, epsilon=epsilon, iterations=int(it))


def predict_svr(model: SvrModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.w.shape[0]:
        raise ValueError(f"model expects {model.w.shape[0]} features, got {X.shape[1]}")
    return X @ model.w + model.b


# ---------------------------------------------------------------- LS-Boost


def train_lsboost(X, y, m_stages: int = 100, shrinkage: float = 1.0) -> BoostModel:
    X, y = _check_xy(X, y)
    if m_stages < 0:
        raise ValueError("m_stages must be >= 0")
    if not 0 < shrinkage <= 1:
        raise ValueError("shrinkage must lie in (0, 1]")
    f0 = float(np.mean(y))
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)
    X = np.ascontiguousarray(X)
    F = np.full(X.shape[0], f0)
    stages = []
    for _ in range(m_stages):
        resid = y - F
        j, thr, left, right, _score = kernels.best_stump(X, order, resid)
        stump = Stump(int(j), float(thr), float(left), float(right))
        F = F + shrinkage * stump(X)
        stages.append((stump, 1.0))
    return BoostModel(f0=f0, stages=tuple(stages), shrinkage=shrinkage)


def predict_lsboost(model: BoostModel, X, n_stages: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    F = np.full(X.shape[0], model.f0)
    for stump, rho in model.stages[:n_stages]:
        F = F + model.shrinkage * (rho * stump(X))
    return F


def staged_mse(model: BoostModel, X, y) -> np.ndarray:
    """Training MSE after 0, 1, ..., M stages."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    F = np.full(X.shape[0], model.f0)
    out = [float(np.mean((y - F) ** 2))]
    for stump, _rho in model.stages:
        F = F + model.shrinkage * stump(X)
        out.append(float(np.mean((y - F) ** 2)))
    return np.array(out)


# ---------------------------------------------------------------- metrics


def compute_metrics(y_true, y_pred) -> Metrics:
    yt = np.asarray(y_true, dtype=float)
    yp = np.asarray(y_pred, dtype=float)
    if yt.shape != yp.shape or yt.ndim != 1 or yt.size == 0:
        raise ValueError(f"need equal non-empty 1-D arrays, got {yt.shape} and {yp.shape}")
    zero = np.flatnonzero(yt == 0)
    if zero.size:
        raise ValueError(f"MAPE undefined: y_true is zero at positions {zero.tolist()}")
    err = yt - yp
    mape = 100.0 * float(np.mean(np.abs(err) / np.abs(yt)))
    mae = float(np.mean(np.abs(err)))
    rmse = math.sqrt(float(np.mean(err * err)))
    return Metrics(mape=mape, mae=mae, rmse=rmse)


# ---------------------------------------------------------------- serialisation


def model_to_record(model, normalizer: Normalizer | None = None) -> dict:
    rec: dict = {"format": "toporel-model", "version": MODEL_FORMAT_VERSION}
    if normalizer is not None:
        rec["scheme"] = normalizer.scheme
        rec["n"] = normalizer.n
        rec["normalizer"] = normalizer.to_record()
    if isinstance(model, SvrModel):
        rec["kind"] = "svr"
        rec["hyperparameters"] = {"c": model.c, "epsilon": model.epsilon, "kernel": "linear"}
        rec["w"] = [float(v) for v in model.w]
        rec["b"] = float(model.b)
        rec["iterations"] = model.iterations
    elif isinstance(model, BoostModel):
        rec["kind"] = "lsboost"
        rec["hyperparameters"] = {
            "m_stages": model.n_stages,
            "shrinkage": model.shrinkage,
            "depth": 1,
        }
        rec["f0"] = model.f0
        rec["stages"] = [
            {"feature": s.feature, "threshold": s.threshold, "left": s.left, "right": s.right, "rho": rho}
            for s, rho in model.stages
        ]
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return rec


def model_from_record(rec: dict):
    if rec.get("format") != "toporel-model":
        raise ValueError("not a toporel model record")
    if rec.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {rec.get('version')}")
    normalizer = Normalizer.from_record(rec["normalizer"]) if "normalizer" in rec else None
    if rec["kind"] == "svr":
        hp = rec["hyperparameters"]
        model = SvrModel(
            w=np.array(rec["w"], dtype=float), b=float(rec["b"]), c=hp["c"],
            epsilon=hp["epsilon"], iterations=rec.get("iterations", 0),
        )
    elif rec["kind"] == "lsboost":
        stages = tuple(
            (Stump(s["feature"], s["threshold"], s["left"], s["right"]), s["rho"]) for s in rec["stages"]
        )
        model = BoostModel(f0=rec["f0"], stages=stages, shrinkage=rec["hyperparameters"]["shrinkage"])
    else:
        raise ValueError(f"unknown model kind {rec['kind']!r}")
    return model, normalizer


def save_model(path, model, normalizer: Normalizer | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_record(model, normalizer), fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_record(json.load(fh))
