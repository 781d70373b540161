#!/usr/bin/env python3
"""
MGMC command-line interface.

Usage:
    mgmc generate --out-dir data/synth --seed 0
    mgmc train --dataset data/synth/synthetic_s0.csv --level 50 --out-dir runs/train
    mgmc impute --dataset data/synth/synthetic_s0.csv --method knn --out-dir runs/impute
    mgmc evaluate --dataset data/synth/synthetic_s0.csv --method mgmc --method lr+mean --folds 10
    mgmc search --dataset data/synth/synthetic_s0.csv --budget 120 --out-dir runs/search
    mgmc report --run-id 3

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error,
1 anything else.
"""

import argparse
import sqlite3
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from baselines.imputers import IMPUTERS, impute
from constants import (
    AVAILABILITY_LEVELS,
    DEFAULT_FOLDS,
    DEFAULT_KNN_NEIGHBORS,
    DEFAULT_SEARCH_BUDGET,
    METRIC_NAMES,
    VALID_METHODS,
)
from cohort import MaskedDataset, SyntheticSpec, apply_availability, assign_splits, generate_synthetic
from cohort.loader import load_csv, write_dataset
from errors import ConfigError, DataError, MgmcError
from evaluation.harness import run_experiment
from evaluation.metrics import accuracy
from evaluation.report import level_key
from evaluation.store import get_run, list_runs, record_run, run_summary
from graphs.population import build_graphs, export_graph
from training.search import hyper_search
from training.trainer import TrainConfig, train
from utils.config import load_settings
from utils.log import get_logger, setup_logging

logger = get_logger("cli")


# =============================================================================
# HELPERS
# =============================================================================


def parse_levels(text: str) -> list[float]:
    """
    Percent availability levels: "100,75,50,25" -> [1.0, 0.75, 0.5, 0.25].

    Every value is a percentage in (0, 100], so "1" means 1%, not 100%.
    """
    levels = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError:
            raise ConfigError(f"invalid availability level '{part}'")
        if not 0 < value <= 100:
            raise ConfigError(f"availability level {part}% outside (0, 100]")
        levels.append(value / 100.0)
    if not levels:
        raise ConfigError("no availability levels given")
    return levels


def parse_methods(values: Optional[list[str]]) -> list[str]:
    if not values:
        return list(VALID_METHODS)
    methods = [m.strip() for value in values for m in value.split(",") if m.strip()]
    invalid = [m for m in methods if m not in VALID_METHODS]
    if invalid:
        raise ConfigError(f"Invalid method(s) {', '.join(invalid)}. Valid: {', '.join(VALID_METHODS)}")
    return methods


def load_dataset(args) -> MaskedDataset:
    path = Path(args.dataset)
    schema = Path(args.schema) if args.schema else path.with_name(f"{path.stem}.schema.json")
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    if not schema.exists():
        raise DataError(f"schema not found: {schema} (pass --schema)")
    return load_csv(path, schema)


def build_config(args) -> TrainConfig:
    config = TrainConfig.load(args.config) if getattr(args, "config", None) else TrainConfig()
    changes = {"seed": args.seed}
    if getattr(args, "epochs", None) is not None:
        changes["epochs"] = args.epochs
    if getattr(args, "autoregressive", False):
        changes["autoregressive"] = True
    return config.with_updates(**changes)


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_generate(args) -> int:
    spec = SyntheticSpec(
        n=args.n, m=args.m, c=args.classes, rank=args.rank, noise=args.noise,
        n_meta=args.metas, rho=args.rho, seed=args.seed,
    )
    dataset = generate_synthetic(spec)
    paths = write_dataset(dataset, args.out_dir, name=args.name)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args)
    config = build_config(args)
    level = parse_levels(args.level)[0]
    ds = apply_availability(assign_splits(dataset, args.seed), level, args.seed)
    graphs = build_graphs(ds.metas)
    if not graphs:
        raise ConfigError("schema declares no meta-features; at least one graph is required")

    model, log = train(ds, graphs, config)
    prediction = model.predict(ds.z, graphs)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save(out_dir / "model.mgmc")
    config.save(out_dir / "config.json")
    log.write_csv(out_dir / "training_log.csv")
    for graph in graphs:
        export_graph(graph, out_dir / "graphs")

    pd.DataFrame(prediction.alpha, columns=[g.name for g in graphs]).to_csv(
        out_dir / "attention.csv", index_label="row", float_format="%.17g"
    )
    predictions = pd.DataFrame(prediction.probabilities, columns=[f"p_{c}" for c in ds.class_names])
    predictions.insert(0, "predicted", [ds.class_names[k] for k in prediction.classes])
    predictions.insert(0, "split", ds.split)
    predictions.to_csv(out_dir / "predictions.csv", index_label="row", float_format="%.17g")

    test = ds.test_rows
    print(f"Trained {len(graphs)}-graph model: {log.epochs_run} epochs, best epoch {log.best_epoch}, "
          f"val loss {log.best_val_loss:.4f}")
    print(f"Test accuracy: {accuracy(prediction.classes[test], ds.labels[test]):.4f}")
    print(f"Outputs written to {out_dir}")
    return 0


def cmd_impute(args) -> int:
    dataset = load_dataset(args)
    filled = impute(args.method, dataset.features, dataset.observed, args.k)
    mean, std = dataset.column_stats
    raw = filled.values * std + mean
    # observed cells keep their file values exactly
    raw = np.where(dataset.observed, dataset.raw, raw)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = list(dataset.feature_names)
    pd.DataFrame(raw, columns=columns).to_csv(out_dir / "imputed.csv", index=False, float_format="%.17g")
    pd.DataFrame(filled.imputed.astype(int), columns=columns).to_csv(out_dir / "imputed_mask.csv", index=False)
    print(f"Imputed {int(filled.imputed.sum())} entries with {args.method}; outputs in {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    settings = load_settings()
    dataset = load_dataset(args)
    report = run_experiment(
        dataset,
        parse_methods(args.method),
        levels=parse_levels(args.levels),
        folds=args.folds,
        seed=args.seed,
        config=build_config(args),
        k=args.k,
        lr_budget=args.budget,
        workers=args.workers or settings.workers,
    )
    paths = report.write(args.out_dir)
    run_id = record_run(args.db or settings.db_path, report, dataset.name, out_dir=args.out_dir)
    print_summary(report.summary())
    print(f"\nRun {run_id}: {paths['cells']}, {paths['summary']}")
    return 0


def cmd_search(args) -> int:
    settings = load_settings()
    dataset = load_dataset(args)
    level = parse_levels(args.level)[0]
    ds = apply_availability(assign_splits(dataset, args.seed), level, args.seed)
    result = hyper_search(
        ds, build_graphs(ds.metas), budget=args.budget, seed=args.seed,
        base=build_config(args), workers=args.workers or settings.workers,
    )
    out_dir = Path(args.out_dir)
    result.write_csv(out_dir / "trials.csv")
    result.best.save(out_dir / "best_config.json")
    print(f"Best of {args.budget} trials: val loss {result.best_val_loss:.4f}")
    print(f"Outputs written to {out_dir}")
    return 0


def print_summary(summary: dict) -> None:
    print(f"{'method':<22}{'level':>6}  " + "".join(f"{name:>20}" for name in METRIC_NAMES))
    for method, levels in summary.items():
        for level, metrics in levels.items():
            cells = []
            for name in METRIC_NAMES:
                stat = metrics[name]
                cells.append("-" if stat["median"] is None else f"{stat['median']:.4f} ± {stat['std']:.4f}")
            print(f"{method:<22}{level + '%':>6}  " + "".join(f"{c:>20}" for c in cells))


def cmd_report(args) -> int:
    db_path = args.db or load_settings().db_path
    runs = list_runs(db_path, limit=args.limit)
    if args.list:
        for run in runs:
            print(f"{run['id']:>5}  {run['created_at']}  {run['command']:<9} {run['dataset']:<24} seed={run['seed']}")
        return 0
    if args.run_id is None:
        if not runs:
            raise DataError(f"no runs recorded in {db_path}")
        args.run_id = runs[0]["id"]
    run = get_run(db_path, args.run_id)
    print(f"Run {run['id']} ({run['dataset']}, seed {run['seed']}, {run['created_at']})")
    print_summary(run_summary(db_path, args.run_id))
    return 0


# =============================================================================
# PARSER
# =============================================================================


def _dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="Dataset CSV")
    parser.add_argument("--schema", help="Schema JSON (default: <dataset stem>.schema.json)")


def _train_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TrainConfig JSON file")
    parser.add_argument("--epochs", type=int, help="Override epoch budget")
    parser.add_argument("--autoregressive", action="store_true", help="Feed the accumulated prediction back into the GCN")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgmc", description="Multigraph geometric matrix completion")
    parser.add_argument("--log-level", help="Logging level (default: MGMC_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Write a synthetic dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--name", help="File stem (default: synthetic_s<seed>)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=300, help="Rows")
    p.add_argument("--m", type=int, default=40, help="Features")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--rank", type=int, default=2, help="Latent rank per cluster")
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--metas", type=int, default=3, help="Meta-features")
    p.add_argument("--rho", type=float, default=0.9, help="Probability a meta value equals the cluster")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="Train one model and write its outputs")
    _dataset_args(p)
    _train_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", default="100", help="Availability level in percent (default: 100)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("impute", help="Impute missing features with a baseline imputer")
    _dataset_args(p)
    p.add_argument("--method", choices=IMPUTERS, default="mean")
    p.add_argument("--k", type=int, default=DEFAULT_KNN_NEIGHBORS)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("evaluate", help="Run the fold x availability x method experiment")
    _dataset_args(p)
    _train_args(p)
    p.add_argument("--method", action="append", help=f"Method (repeatable or comma list). Valid: {', '.join(VALID_METHODS)}")
    p.add_argument("--levels", default=",".join(level_key(level) for level in AVAILABILITY_LEVELS))
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=DEFAULT_KNN_NEIGHBORS, help="kNN neighbours")
    p.add_argument("--budget", type=int, default=0, help="Learning rates tried per baseline classifier")
    p.add_argument("--workers", type=int, help="Worker threads (default: MGMC_WORKERS)")
    p.add_argument("--db", help="Results store (default: MGMC_DB_PATH)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("search", help="Random hyperparameter search")
    _dataset_args(p)
    _train_args(p)
    p.add_argument("--budget", type=int, default=DEFAULT_SEARCH_BUDGET)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", default="100", help="Availability level in percent (default: 100)")
    p.add_argument("--workers", type=int, help="Worker threads (default: MGMC_WORKERS)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("report", help="Show recorded experiment runs")
    p.add_argument("--run-id", type=int, help="Run to summarize (default: latest)")
    p.add_argument("--list", action="store_true", help="List runs instead")
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--db", help="Results store (default: MGMC_DB_PATH)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        setup_logging(level=args.log_level or load_settings().log_level)
        return args.func(args)
    except MgmcError as e:
        print(f"error ({e.category}): {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, sqlite3.Error) as e:
        print(f"error ({DataError.category}): {e}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
