"""Command-line entry point: ``toporel <subcommand> ...``.

Exit status: 0 success, 1 domain error (bad case file, scheme mismatch,
solver failure, missing file), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from .enumeration import enumerate_lolp
from .features import SCHEMES, fit_normalizer
from .grid import GridCase, load_case, load_rts79
from .mcs import McsConfig, run_mcs
from .models import (
    compute_metrics,
    load_model,
    predict_lsboost,
    predict_svr,
    save_model,
    train_lsboost,
    train_svr,
    SvrModel,
)
from .network import TopologyChange, apply_change
from .pipeline import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    build_dataset,
    case_id_for,
    format_report,
    read_dataset,
    run_experiment,
    screen_cases,
    write_dataset,
)
from .state_test import TESTERS

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class DomainError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _jobs(text: str) -> int:
    if text == "auto":
        return os.cpu_count() or 1
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--jobs takes a positive integer or 'auto', got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("--jobs must be >= 1")
    return v


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        if action.required:
            return f"{action.help} (required)"
        return super()._get_help_string(action)


def _formatter(prog):
    return _HelpFormatter(prog, width=100)


def _add_case(p, required=True):
    p.add_argument("--case", required=required, default=None if required else "rts79.case",
                   help="case file; 'rts79.case' falls back to the bundled fixture when absent")


def _add_mcs(p):
    p.add_argument("--tester", choices=TESTERS, default="dc", help="state tester")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--beta", type=float, default=0.02, help="coefficient-of-variation stop threshold")
    p.add_argument("--max-iter", type=int, default=4000, help="maximum MCS iterations")


def _add_models(p):
    p.add_argument("--c", type=float, default=1.0, help="SVR regularisation constant")
    p.add_argument("--epsilon", type=float, default=0.001, help="SVR tube half-width")
    p.add_argument("--stages", type=int, default=100, help="LS-Boost stages (learning cycles)")
    p.add_argument("--shrinkage", type=float, default=1.0, help="LS-Boost shrinkage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toporel",
        description="Topology-aware LOLP labelling (Monte Carlo) and prediction (SVR, LS-Boost).",
        formatter_class=_formatter,
    )
    parser.add_argument("--version", action="version", version=f"toporel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("gen-cases", help="list admissible branch-removal topologies", formatter_class=_formatter)
    _add_case(p)
    p.add_argument("--orders", type=_int_list, default="1,2", help="removal orders, e.g. 1,2")
    p.add_argument("--tester", choices=TESTERS, default="dc", help="state tester for the base-state screen")

    p = sub.add_parser("mcs", help="Monte Carlo LOLP for one topology", formatter_class=_formatter)
    _add_case(p)
    p.add_argument("--remove", type=_int_list, default="", help="branch indices to remove, e.g. 3,17")
    _add_mcs(p)

    p = sub.add_parser("enum", help="truncated outage enumeration bounds", formatter_class=_formatter)
    _add_case(p)
    p.add_argument("--order", type=int, default=3, help="maximum number of simultaneous unit outages")
    p.add_argument("--remove", type=_int_list, default="", help="branch indices to remove")
    p.add_argument("--tester", choices=TESTERS, default="dc", help="state tester")

    p = sub.add_parser("build-dataset", help="label topologies with MCS LOLP", formatter_class=_formatter)
    _add_case(p)
    p.add_argument("--orders", type=_int_list, default="1,2", help="removal orders, e.g. 1,2")
    p.add_argument("--features", choices=SCHEMES, default="full", help="feature scheme")
    _add_mcs(p)
    p.add_argument("--jobs", type=_jobs, default="auto", help="worker processes")
    p.add_argument("--out", required=True, help="dataset output (JSON lines)")
    p.add_argument("--manifest", default=None, help="manifest path; None means <out>.manifest.json")

    p = sub.add_parser("train", help="train a regressor on a dataset", formatter_class=_formatter)
    p.add_argument("--dataset", required=True, help="dataset file (JSON lines)")
    p.add_argument("--model", choices=("svr", "bt"), default="svr", help="model kind")
    p.add_argument("--features", choices=SCHEMES, default="full", help="expected feature scheme")
    _add_models(p)
    p.add_argument("--out", required=True, help="model output file")

    p = sub.add_parser("predict", help="predict LOLP for dataset records", formatter_class=_formatter)
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--dataset", required=True, help="dataset file (JSON lines)")

    p = sub.add_parser("evaluate", help="MAPE/MAE/RMSE of a model on a dataset", formatter_class=_formatter)
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--dataset", required=True, help="dataset file (JSON lines)")

    p = sub.add_parser("experiment", help="run an experiment protocol", formatter_class=_formatter)
    p.add_argument("--kind", choices=EXPERIMENT_KINDS, default="basic", help="experiment protocol")
    p.add_argument("--dataset", required=True, help="dataset file (JSON lines)")
    _add_case(p, required=False)
    p.add_argument("--fractions", type=_float_list, default=None,
                   help="training fractions; None means the per-kind set (basic 0.9; scalability and"
                        " partial 0.9,0.7,0.5; generalizability 1,0.75,0.5)")
    p.add_argument("--split-seed", type=int, default=0, help="seed of the random train/test split")
    _add_models(p)
    p.add_argument("--n-order3", type=int, default=20, help="order-3 test topologies (generalizability)")
    p.add_argument("--order3-seed", type=int, default=1, help="seed for drawing order-3 topologies")
    _add_mcs(p)
    p.add_argument("--jobs", type=_jobs, default="auto", help="worker processes")
    p.add_argument("--out-dir", default="report", help="directory for report.json, report.txt, timings.json")
    return parser


def _resolve_case(path: str) -> GridCase:
    if not os.path.exists(path):
        if os.path.basename(path) == "rts79.case":
            return load_rts79()
        raise DomainError(f"case file not found: {path}")
    return load_case(path)


def _emit(rec: dict) -> None:
    print(json.dumps(rec, sort_keys=True))


def _mcs_config(args) -> McsConfig:
    return McsConfig(beta_threshold=args.beta, max_iterations=args.max_iter, seed=args.seed, tester=args.tester)


def _read(path):
    if not os.path.exists(path):
        raise DomainError(f"file not found: {path}")
    return read_dataset(path)


def cmd_gen_cases(args) -> int:
    case = _resolve_case(args.case)
    scr = screen_cases(case, args.orders, args.tester)
    for ch in scr.kept:
        _emit({"record": "case", "case_id": case_id_for(case, ch), "removed": list(ch.sorted()), "order": ch.order})
    _emit({"record": "summary", "orders": args.orders, "tester": args.tester, **scr.counts})
    return EXIT_OK


def cmd_mcs(args) -> int:
    case = _resolve_case(args.case)
    change = TopologyChange(args.remove)
    changed = apply_change(case, change)
    res = run_mcs(changed, _mcs_config(args))
    _emit({
        "record": "mcs",
        "case_id": case_id_for(case, change),
        "removed": list(change.sorted()),
        "tester": args.tester,
        "seed": args.seed,
        "beta_threshold": args.beta,
        "max_iterations": args.max_iter,
        **res.to_record(),
    })
    return EXIT_OK


def cmd_enum(args) -> int:
    case = _resolve_case(args.case)
    change = TopologyChange(args.remove)
    bounds = enumerate_lolp(apply_change(case, change), args.tester, args.order)
    _emit({"record": "enum", "case_id": case_id_for(case, change), "order": args.order,
           "tester": args.tester, **bounds.to_record()})
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    case = _resolve_case(args.case)
    t0 = time.perf_counter()
    scr = screen_cases(case, args.orders, args.tester)
    t1 = time.perf_counter()
    samples, failures = build_dataset(case, scr.kept, _mcs_config(args), args.features, jobs=args.jobs)
    t2 = time.perf_counter()
    write_dataset(args.out, samples)
    counts = dict(scr.counts)
    counts["mcs_failed"] = len(failures)
    counts["kept"] -= len(failures)
    manifest = {
        "format": "toporel-manifest",
        "version": 1,
        "case": case.name,
        "case_file": args.case,
        "orders": args.orders,
        "features": args.features,
        "mcs": {"tester": args.tester, "seed": args.seed, "beta_threshold": args.beta,
                "max_iterations": args.max_iter},
        "counts": counts,
        "mcs_failures": failures,
        "labels_at_iteration_cap": sum(1 for s in samples if not s.converged_by_beta),
        "jobs": args.jobs,
    }
    mpath = args.manifest or f"{args.out}.manifest.json"
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(f"{args.out}.timings.json", "w", encoding="utf-8") as fh:
        json.dump({"screening_s": t1 - t0, "labelling_s": t2 - t1, "jobs": args.jobs}, fh, indent=1)
        fh.write("\n")
    _emit({"record": "dataset", "path": args.out, "manifest": mpath, "samples": len(samples), **counts})
    return EXIT_OK


def _check_scheme(samples, expected, what):
    found = {s.features.scheme for s in samples}
    if found != {expected}:
        raise DomainError(
            f"feature scheme mismatch: {what} uses {sorted(found)}, expected '{expected}'"
        )


def cmd_train(args) -> int:
    samples = _read(args.dataset)
    if not samples:
        raise DomainError(f"dataset {args.dataset} is empty")
    _check_scheme(samples, args.features, f"dataset {args.dataset}")
    norm = fit_normalizer([s.features for s in samples])
    import numpy as np

    X = norm.transform(np.stack([s.features.values for s in samples]))
    y = np.array([s.lolp for s in samples])
    if args.model == "svr":
        model = train_svr(X, y, c=args.c, epsilon=args.epsilon)
    else:
        model = train_lsboost(X, y, m_stages=args.stages, shrinkage=args.shrinkage)
    save_model(args.out, model, norm)
    _emit({"record": "model", "path": args.out, "model": args.model, "scheme": args.features,
           "samples": len(samples)})
    return EXIT_OK


def _predict(args):
    import numpy as np

    if not os.path.exists(args.model):
        raise DomainError(f"file not found: {args.model}")
    model, norm = load_model(args.model)
    samples = _read(args.dataset)
    if not samples:
        raise DomainError(f"dataset {args.dataset} is empty")
    _check_scheme(samples, norm.scheme, f"dataset {args.dataset}")
    X = norm.transform(np.stack([s.features.values for s in samples]))
    raw = predict_svr(model, X) if isinstance(model, SvrModel) else predict_lsboost(model, X)
    return samples, np.clip(raw, 0.0, 1.0)


def cmd_predict(args) -> int:
    samples, pred = _predict(args)
    for s, p in zip(samples, pred):
        _emit({"record": "prediction", "case_id": s.case_id, "removed": list(s.removed),
               "lolp_pred": float(p), "lolp_mcs": s.lolp})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    samples, pred = _predict(args)
    m = compute_metrics([s.lolp for s in samples], pred)
    _emit({"record": "metrics", "samples": len(samples), **m.to_record()})
    return EXIT_OK


def cmd_experiment(args) -> int:
    samples = _read(args.dataset)
    case = _resolve_case(args.case)
    cfg = ExperimentConfig(
        kind=args.kind,
        fractions=tuple(args.fractions) if args.fractions else None,
        split_seed=args.split_seed,
        c=args.c,
        epsilon=args.epsilon,
        m_stages=args.stages,
        shrinkage=args.shrinkage,
        n_order3=args.n_order3,
        order3_seed=args.order3_seed,
        mcs=_mcs_config(args),
        jobs=args.jobs,
    )
    report = run_experiment(cfg, samples, case)
    os.makedirs(args.out_dir, exist_ok=True)
    text = format_report(report)
    with open(os.path.join(args.out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(os.path.join(args.out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(os.path.join(args.out_dir, "timings.json"), "w", encoding="utf-8") as fh:
        json.dump(report.timings, fh, indent=1, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "gen-cases": cmd_gen_cases,
    "mcs": cmd_mcs,
    "enum": cmd_enum,
    "build-dataset": cmd_build_dataset,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    if getattr(args, "max_iter", 1) < 1 or not getattr(args, "beta", 1.0) > 0:
        parser.error("--beta must be positive and --max-iter >= 1")
    try:
        return COMMANDS[args.command](args)
    except (DomainError, ValueError, KeyError, OSError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"toporel {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
