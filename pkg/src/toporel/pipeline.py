"""Dataset creation, experiment protocols and reporting.

A dataset is labelled one topology at a time: remove the maintenance
branches, extract features, run a complete MCS.  Candidate topologies are
screened first (graph connectivity, then the all-units-up state must pass the
tester) so that no label is pinned at LOLP = 1.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .features import FeatureVector, extract, fit_normalizer
from .grid import GridCase
from .mcs import McsConfig, run_mcs
from .models import (
    compute_metrics,
    predict_lsboost,
    predict_svr,
    train_lsboost,
    train_svr,
)
from .network import TopologyChange, apply_change, find_bridges, is_connected
from .state_test import TesterError, make_tester

log = logging.getLogger(__name__)

__all__ = [
    "LabeledSample",
    "Screening",
    "screen_cases",
    "generate_cases",
    "case_id_for",
    "derive_seed",
    "label_change",
    "build_dataset",
    "write_dataset",
    "read_dataset",
    "split_dataset",
    "sample_order3",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "format_report",
    "EXPERIMENT_KINDS",
]

EXPERIMENT_KINDS = ("basic", "scalability", "generalizability", "partial")
DEFAULT_FRACTIONS = {
    "basic": (0.9,),
    "scalability": (0.9, 0.7, 0.5),
    "generalizability": (1.0, 0.75, 0.5),
    "partial": (0.9, 0.7, 0.5),
}


@dataclass(frozen=True, eq=False)
class LabeledSample:
    case_id: str
    removed: tuple[int, ...]
    features: FeatureVector
    lolp: float
    beta: float
    iterations: int
    converged_by_beta: bool = False

    @property
    def order(self) -> int:
        return len(self.removed)

    def to_record(self) -> dict:
        return {
            "case_id": self.case_id,
            "removed": list(self.removed),
            "order": self.order,
            "scheme": self.features.scheme,
            "n": self.features.n,
            "features": [float(v) for v in self.features.values],
            "lolp": self.lolp,
            "beta": None if math.isinf(self.beta) else self.beta,
            "iterations": self.iterations,
            "converged_by_beta": self.converged_by_beta,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "LabeledSample":
        fv = FeatureVector(rec["scheme"], np.array(rec["features"], dtype=float), int(rec["n"]))
        beta = math.inf if rec["beta"] is None else float(rec["beta"])
        return cls(
            case_id=rec["case_id"],
            removed=tuple(rec["removed"]),
            features=fv,
            lolp=float(rec["lolp"]),
            beta=beta,
            iterations=int(rec["iterations"]),
            converged_by_beta=bool(rec.get("converged_by_beta", False)),
        )


# ---------------------------------------------------------------- screening


@dataclass
class Screening:
    kept: list[TopologyChange]
    counts: dict[str, int]


def _base_state_ok(case: GridCase, tester: str) -> bool:
    return not make_tester(case, tester).is_failure(np.ones(len(case.units), dtype=bool))


def screen_cases(case: GridCase, orders: Iterable[int], tester: str = "dc") -> Screening:
    """Enumerate removal sets and drop disconnected or base-infeasible topologies.

    Output is ordered by removal order, then lexicographically by branch index.
    Disconnected sets that contain a bridge of the base network are counted as
    bridge exclusions, the rest as disconnection exclusions.
    """
    orders = sorted(set(int(o) for o in orders))
    if any(o < 1 or o > 3 for o in orders):
        raise ValueError(f"orders must be within 1..3, got {orders}")
    indices = sorted(br.index for br in case.branches)
    bridges = find_bridges(case)
    counts = {"generated": 0, "kept": 0, "bridge_excluded": 0,
              "disconnection_excluded": 0, "step2_excluded": 0}
    kept = []
    for order in orders:
        for removed in combinations(indices, order):
            counts["generated"] += 1
            changed = apply_change(case, removed)
            if not is_connected(changed):
                key = "bridge_excluded" if bridges.intersection(removed) else "disconnection_excluded"
                counts[key] += 1
                continue
            if not _base_state_ok(changed, tester):
                counts["step2_excluded"] += 1
                continue
            kept.append(TopologyChange(removed))
            counts["kept"] += 1
    return Screening(kept, counts)


def generate_cases(case: GridCase, orders: Iterable[int], tester: str = "dc") -> list[TopologyChange]:
    return screen_cases(case, orders, tester).kept


def sample_order3(case: GridCase, count: int, seed: int, tester: str = "dc") -> list[TopologyChange]:
    """Uniform draw of ``count`` connected, base-feasible triple removals."""
    if count < 1:
        raise ValueError("need at least one order-3 test sample")
    indices = sorted(br.index for br in case.branches)
    triples = list(combinations(indices, 3))
    rng = np.random.default_rng(seed)
    picked = []
    for k in rng.permutation(len(triples)):
        changed = apply_change(case, triples[k])
        if is_connected(changed) and _base_state_ok(changed, tester):
            picked.append(triples[k])
            if len(picked) == count:
                break
    if len(picked) < count:
        raise ValueError(f"only {len(picked)} admissible order-3 removals exist, {count} requested")
    return [TopologyChange(t) for t in sorted(picked)]


# ---------------------------------------------------------------- labelling


def case_id_for(case: GridCase, change: TopologyChange) -> str:
    tag = "-".join(str(i) for i in change.sorted()) or "base"
    return f"{case.name}:{tag}"


def derive_seed(master_seed: int, case_id: str) -> int:
    digest = hashlib.blake2b(f"{int(master_seed)}|{case_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def label_change(case: GridCase, change: TopologyChange, config: McsConfig, scheme: str) -> LabeledSample:
    changed = apply_change(case, change)
    cid = case_id_for(case, change)
    fv = extract(changed, scheme)
    res = run_mcs(changed, replace(config, seed=derive_seed(config.seed, cid)))
    return LabeledSample(
        case_id=cid,
        removed=change.sorted(),
        features=fv,
        lolp=res.lolp,
        beta=res.beta,
        iterations=res.iterations,
        converged_by_beta=res.converged_by_beta,
    )


def _label_job(args):
    case, removed, config, scheme = args
    change = TopologyChange(removed)
    try:
        return label_change(case, change, config, scheme), None
    except (TesterError, ValueError) as exc:
        return None, f"{case_id_for(case, change)}: {exc}"


def build_dataset(
    case: GridCase,
    changes: Sequence[TopologyChange],
    config: McsConfig,
    scheme: str = "full",
    jobs: int = 1,
) -> tuple[list[LabeledSample], list[str]]:
    """Label every change; returns (samples, failure messages), both in input order."""
    work = [(case, ch.sorted(), config, scheme) for ch in changes]
    if jobs > 1 and len(work) > 1:
        chunk = max(1, len(work) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_label_job, work, chunksize=chunk))
    else:
        results = [_label_job(w) for w in work]
    samples = [s for s, err in results if s is not None]
    failures = [err for s, err in results if err is not None]
    for msg in failures:
        log.warning("MCS failed, case skipped: %s", msg)
    return samples, failures


def write_dataset(path, samples: Sequence[LabeledSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_record(), separators=(",", ":")))
            fh.write("\n")


def read_dataset(path) -> list[LabeledSample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(LabeledSample.from_record(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad dataset record ({exc})") from None
    return out


def split_dataset(dataset: Sequence, train_fraction: float, seed: int):
    """Random train/test partition; test size is round-half-up of N*(1-fraction)."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(dataset)
    n_test = int(math.floor(n * (1.0 - train_fraction) + 0.5))
    if n_test == 0 or n_test == n:
        raise ValueError(f"split of {n} samples at {train_fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = sorted(perm[:n_test].tolist())
    train_idx = sorted(perm[n_test:].tolist())
    return [dataset[i] for i in train_idx], [dataset[i] for i in test_idx]


# ---------------------------------------------------------------- experiments


@dataclass
class ExperimentConfig:
    kind: str = "basic"
    scheme: str = "full"
    fractions: tuple[float, ...] | None = None
    split_seed: int = 0
    c: float = 1.0
    epsilon: float = 0.001
    m_stages: int = 100
    shrinkage: float = 1.0
    n_order3: int = 20
    order3_seed: int = 1
    mcs: McsConfig = field(default_factory=McsConfig)
    jobs: int = 1

    def resolved_fractions(self) -> tuple[float, ...]:
        return tuple(self.fractions) if self.fractions else DEFAULT_FRACTIONS[self.kind]

    def echo(self) -> dict:
        d = asdict(self)
        d["fractions"] = list(self.resolved_fractions())
        d.pop("jobs")
        return d


@dataclass
class ExperimentReport:
    body: dict
    timings: dict

    def to_json(self) -> str:
        return json.dumps(self.body, indent=1, sort_keys=True) + "\n"


def _matrix(samples: Sequence[LabeledSample]) -> np.ndarray:
    return np.stack([s.features.values for s in samples])


def _evaluate_block(label, train, test, cfg: ExperimentConfig, extra_points, timings) -> dict:
    schemes = {s.features.scheme for s in list(train) + list(test)}
    if len(schemes) != 1:
        raise ValueError(f"feature scheme mismatch between train and test: {sorted(schemes)}")
    norm = fit_normalizer([s.features for s in train])
    Xtr = norm.transform(_matrix(train))
    Xte = norm.transform(_matrix(test))
    ytr = np.array([s.lolp for s in train])
    yte = np.array([s.lolp for s in test])

    block = {"label": label, "n_train": len(train), "n_test": len(test), "models": {}}
    preds = {}
    t_block = {}
    for name in ("svr", "bt"):
        t0 = time.perf_counter()
        if name == "svr":
            model = train_svr(Xtr, ytr, c=cfg.c, epsilon=cfg.epsilon)
            predict = lambda X, m=model: predict_svr(m, X)
        else:
            model = train_lsboost(Xtr, ytr, m_stages=cfg.m_stages, shrinkage=cfg.shrinkage)
            predict = lambda X, m=model: predict_lsboost(m, X)
        t1 = time.perf_counter()
        p = np.clip(predict(Xte), 0.0, 1.0)
        t2 = time.perf_counter()
        preds[name] = p
        block["models"][name] = compute_metrics(yte, p).to_record()
        t_block[name] = {"train_s": t1 - t0, "predict_s": t2 - t1}
        for key, (fv, truth) in extra_points.items():
            xp = norm.transform(fv.values[None, :])
            block.setdefault("reference_points", {}).setdefault(key, {"mcs": truth})[name] = float(
                np.clip(predict(xp), 0.0, 1.0)[0]
            )
    block["samples"] = [
        {"case_id": s.case_id, "true": s.lolp, "svr": float(preds["svr"][k]), "bt": float(preds["bt"][k])}
        for k, s in enumerate(test)
    ]
    block["capped_labels"] = sum(1 for s in list(train) + list(test) if not s.converged_by_beta)
    timings[label] = t_block
    return block


def _with_scheme(case: GridCase, samples: Sequence[LabeledSample], scheme: str) -> list[LabeledSample]:
    out = []
    for s in samples:
        if s.features.scheme == scheme:
            out.append(s)
        else:
            fv = extract(apply_change(case, s.removed), scheme)
            out.append(replace(s, features=fv))
    return out


def run_experiment(
    cfg: ExperimentConfig,
    dataset: Sequence[LabeledSample],
    case: GridCase | None = None,
) -> ExperimentReport:
    """Run one experiment protocol and return its report.

    ``basic`` and ``scalability`` split the dataset at each fraction.
    ``generalizability`` trains on a fraction of the dataset and tests on
    freshly labelled order-3 removals.  ``partial`` repeats scalability and
    generalizability with the partial feature layout (needs ``case``).
    """
    if cfg.kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {cfg.kind!r}")
    if not dataset:
        raise ValueError("empty dataset")
    schemes = {s.features.scheme for s in dataset}
    if len(schemes) != 1:
        raise ValueError(f"dataset mixes feature schemes {sorted(schemes)}")
    timings: dict = {}
    blocks = []
    scheme = next(iter(schemes))

    def ref_points(samples_scheme):
        if case is None:
            return {}
        t0 = time.perf_counter()
        base = run_mcs(case, replace(cfg.mcs, seed=derive_seed(cfg.mcs.seed, case_id_for(case, TopologyChange()))))
        timings["base_case_mcs_s"] = time.perf_counter() - t0
        return {"base_case": (extract(case, samples_scheme), base.lolp)}

    def split_blocks(samples, fractions, prefix=""):
        refs = ref_points(samples[0].features.scheme)
        for f in fractions:
            train, test = split_dataset(samples, f, cfg.split_seed)
            blocks.append(_evaluate_block(f"{prefix}train={f:g}", train, test, cfg, refs, timings))

    def generalize_blocks(samples, fractions, prefix=""):
        if case is None:
            raise ValueError("generalizability experiments need the grid case")
        sch = samples[0].features.scheme
        t0 = time.perf_counter()
        changes = sample_order3(case, cfg.n_order3, cfg.order3_seed, cfg.mcs.tester)
        test, failed = build_dataset(case, changes, cfg.mcs, sch, jobs=cfg.jobs)
        timings[f"{prefix}order3_labelling_s"] = time.perf_counter() - t0
        if not test:
            raise ValueError("no order-3 test samples could be labelled")
        for f in fractions:
            train = list(samples) if f >= 1.0 else split_dataset(samples, f, cfg.split_seed)[0]
            blocks.append(_evaluate_block(f"{prefix}original={f:g}", train, test, cfg, {}, timings))

    fractions = cfg.resolved_fractions()
    if cfg.kind in ("basic", "scalability"):
        split_blocks(list(dataset), fractions)
    elif cfg.kind == "generalizability":
        generalize_blocks(list(dataset), fractions)
    else:
        if case is None:
            raise ValueError("the partial-features experiment needs the grid case to re-extract features")
        partial = _with_scheme(case, dataset, "partial")
        split_blocks(partial, fractions, prefix="partial/scalability/")
        generalize_blocks(partial, DEFAULT_FRACTIONS["generalizability"], prefix="partial/generalizability/")
        scheme = "partial"

    body = {
        "format": "toporel-report",
        "version": 1,
        "kind": cfg.kind,
        "scheme": scheme,
        "n_samples": len(dataset),
        "config": cfg.echo(),
        "blocks": blocks,
    }
    return ExperimentReport(body=body, timings=timings)


def format_report(report: ExperimentReport) -> str:
    body = report.body
    lines = [f"experiment: {body['kind']}   features: {body['scheme']}   samples: {body['n_samples']}", ""]
    for blk in body["blocks"]:
        lines.append(f"[{blk['label']}]  train={blk['n_train']}  test={blk['n_test']}"
                     f"  labels at iteration cap={blk['capped_labels']}")
        lines.append(f"  {'model':<6}{'MAPE':>10}{'MAE':>12}{'RMSE':>12}")
        for name, m in blk["models"].items():
            lines.append(f"  {name.upper():<6}{m['mape']:>9.2f}%{m['mae']:>12.5f}{m['rmse']:>12.5f}")
        for key, pt in blk.get("reference_points", {}).items():
            lines.append(f"  {key}: MCS {pt['mcs']:.5f}  SVR {pt['svr']:.5f}  BT {pt['bt']:.5f}")
        lines.append("")
    return "\n".join(lines)


def default_jobs() -> int:
    return os.cpu_count() or 1
