"""
Repeated-holdout experiment harness.

Fold f re-splits the data with seed + f and masks it with the same seed, so
every method sees identical rows and entries within a (fold, level) pair.
Cells (method x level x fold) run in a thread pool and are reassembled by
their coordinates.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from baselines.classifiers import LabeledRows, gcn_classifier, select_learning_rate, softmax_regression
from baselines.imputers import impute
from constants import (
    AVAILABILITY_LEVELS,
    DEFAULT_FOLDS,
    DEFAULT_KNN_NEIGHBORS,
    VALID_METHODS,
)
from cohort.dataset import MaskedDataset
from cohort.masking import apply_availability
from cohort.splits import assign_splits
from errors import ConfigError, MgmcError
from evaluation.metrics import MetricSet, accuracy, masked_rmse, roc_auc
from evaluation.report import ExperimentReport
from graphs.population import PopulationGraph, build_graphs
from training.trainer import TrainConfig, train
from utils.log import get_logger

logger = get_logger("evaluation.harness")


@dataclass(frozen=True)
class MethodOutput:
    """Test-row class probabilities plus the imputed feature block."""

    probabilities: np.ndarray
    features: np.ndarray


@dataclass(frozen=True)
class ExperimentOptions:
    config: TrainConfig
    k: int = DEFAULT_KNN_NEIGHBORS
    # learning rates tried per baseline classifier; 0 uses config.learning_rate
    lr_budget: int = 0


# =============================================================================
# METHODS
# =============================================================================


def _run_mgmc(ds: MaskedDataset, graphs: Sequence[PopulationGraph], config: TrainConfig) -> MethodOutput:
    model, _ = train(ds, graphs, config)
    prediction = model.predict(ds.z, graphs)
    return MethodOutput(prediction.probabilities, prediction.features)


def _run_gmc(ds: MaskedDataset, graphs: Sequence[PopulationGraph], config: TrainConfig) -> MethodOutput:
    """Single-graph model on each graph; keep the lowest validation loss."""
    best, best_loss = None, np.inf
    for graph in graphs:
        model, log = train(ds, [graph], config)
        if best is None or log.best_val_loss < best_loss:
            best, best_loss = (model, graph), log.best_val_loss
    model, graph = best
    logger.debug(f"gmc picked graph '{graph.name}' (val loss {best_loss:.6g})")
    prediction = model.predict(ds.z, [graph])
    return MethodOutput(prediction.probabilities, prediction.features)


def baseline_inputs(ds: MaskedDataset, imputer: str, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(imputed standardized features, imputed features with meta-features appended)."""
    imputed = impute(imputer, ds.features, ds.observed, k, ds.train_rows)
    return imputed.values, np.hstack([imputed.values, ds.meta_matrix()])


def _labeled_rows(ds: MaskedDataset) -> LabeledRows:
    return LabeledRows(ds.labels, ds.c, ds.train_rows, ds.val_rows)


def _run_lr(ds: MaskedDataset, imputer: str, options: ExperimentOptions) -> MethodOutput:
    features, inputs = baseline_inputs(ds, imputer, options.k)
    rows = _labeled_rows(ds)
    config = options.config

    def fit(lr: float):
        classifier = softmax_regression(inputs, rows, lr=lr, epochs=config.epochs, patience=config.patience)
        return classifier, classifier.log.best_val_loss

    if options.lr_budget > 0:
        classifier, _ = select_learning_rate(fit, options.lr_budget, config.seed)
    else:
        classifier, _ = fit(config.learning_rate)
    return MethodOutput(classifier.predict(inputs), features)


def _run_gcn(ds: MaskedDataset, graphs: Sequence[PopulationGraph], imputer: str,
             options: ExperimentOptions) -> MethodOutput:
    """GCN on the best single graph by validation loss."""
    features, inputs = baseline_inputs(ds, imputer, options.k)
    rows = _labeled_rows(ds)

    def fit(lr: float):
        best, best_loss = None, np.inf
        for graph in graphs:
            classifier = gcn_classifier(inputs, graph, rows, options.config.with_updates(learning_rate=lr))
            if best is None or classifier.log.best_val_loss < best_loss:
                best, best_loss = classifier, classifier.log.best_val_loss
        return best, best_loss

    if options.lr_budget > 0:
        classifier, _ = select_learning_rate(fit, options.lr_budget, options.config.seed)
    else:
        classifier, _ = fit(options.config.learning_rate)
    return MethodOutput(classifier.predict(inputs), features)


def run_method(
    method: str,
    ds: MaskedDataset,
    graphs: Sequence[PopulationGraph],
    options: ExperimentOptions,
) -> MethodOutput:
    if method == "mgmc":
        return _run_mgmc(ds, graphs, options.config.with_updates(autoregressive=False))
    if method == "mgmc-autoregressive":
        return _run_mgmc(ds, graphs, options.config.with_updates(autoregressive=True))
    if method == "gmc":
        return _run_gmc(ds, graphs, options.config)
    classifier, imputer = method.split("+")
    if classifier == "lr":
        return _run_lr(ds, imputer, options)
    return _run_gcn(ds, graphs, imputer, options)


def score_cell(method: str, level: float, fold: int, ds: MaskedDataset, output: MethodOutput) -> MetricSet:
    test = ds.test_rows
    truth = ds.labels[test]
    probabilities = output.probabilities[test]
    auc = None
    if len(np.unique(truth)) >= 2:
        auc = roc_auc(probabilities, truth)
    else:
        logger.warning(f"{method} level={level} fold={fold}: test rows hold one class; AUC absent")
    return MetricSet(
        method=method,
        availability=level,
        fold=fold,
        accuracy=accuracy(probabilities.argmax(axis=1), truth),
        auc=auc,
        rmse=masked_rmse(output.features, ds.truth, ds.held_out),
    )


# =============================================================================
# EXPERIMENT
# =============================================================================


def validate_methods(methods: Sequence[str]) -> list[str]:
    invalid = [m for m in methods if m not in VALID_METHODS]
    if invalid:
        raise ConfigError(f"Invalid method(s) {', '.join(invalid)}. Valid: {', '.join(VALID_METHODS)}")
    if not methods:
        raise ConfigError("at least one method is required")
    return list(dict.fromkeys(methods))


def run_experiment(
    dataset: MaskedDataset,
    methods: Sequence[str],
    levels: Sequence[float] = AVAILABILITY_LEVELS,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    config: Optional[TrainConfig] = None,
    k: int = DEFAULT_KNN_NEIGHBORS,
    lr_budget: int = 0,
    workers: int = 1,
) -> ExperimentReport:
    """
    Score every method at every availability level on `folds` re-splits.

    A cell whose training raises a library error is recorded as failed and
    the run continues.
    """
    methods = validate_methods(methods)
    if folds < 1:
        raise ConfigError(f"folds must be >= 1, got {folds}")
    for level in levels:
        if not 0 < level <= 1:
            raise ConfigError(f"availability levels must be in (0, 1], got {level}")
    config = config or TrainConfig(seed=seed)
    options = ExperimentOptions(config=config, k=k, lr_budget=lr_budget)

    graphs = build_graphs(dataset.metas)
    if not graphs and any(m.startswith(("mgmc", "gmc", "gcn")) for m in methods):
        raise ConfigError("graph-based methods need at least one meta-feature")

    prepared = {}
    for fold in range(folds):
        split = assign_splits(dataset, seed + fold)
        for level in levels:
            prepared[(fold, level)] = apply_availability(split, level, seed + fold)

    coords = [(method, level, fold) for method in methods for level in levels for fold in range(folds)]
    logger.info(f"Experiment: {len(methods)} method(s) x {len(levels)} level(s) x {folds} fold(s) "
                f"= {len(coords)} cells, seed={seed}, workers={workers}")

    def run_cell(coord: tuple) -> MetricSet:
        method, level, fold = coord
        ds = prepared[(fold, level)]
        try:
            output = run_method(method, ds, graphs, options)
            cell = score_cell(method, level, fold, ds, output)
        except MgmcError as e:
            logger.warning(f"Cell {method} level={level} fold={fold} failed: {e}")
            return MetricSet(method=method, availability=level, fold=fold, status="failed", error=str(e))
        logger.debug(f"Cell {method} level={level} fold={fold}: acc={cell.accuracy:.3f}")
        return cell

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run_cell, coords))
    else:
        cells = [run_cell(coord) for coord in coords]

    report = ExperimentReport(
        seed=seed,
        methods=methods,
        levels=list(levels),
        folds=folds,
        config={**config.to_dict(), "k": k, "lr_budget": lr_budget},
        cells=cells,
    )
    if report.failed:
        logger.warning(f"{len(report.failed)} of {len(cells)} cells failed")
    return report
