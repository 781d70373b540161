"""
Reference classifiers on pre-imputed features.

Both train with masked cross-entropy, Adam and the shared full-batch loop;
the GCN variant is a single Chebyshev layer plus a linear head, i.e. the
multigraph pipeline with one graph, no recurrence and only the
classification term.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from autodiff import ops
from autodiff.tape import Tape
from constants import DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE, DEFAULT_PATIENCE, LEARNING_RATE_RANGE
from errors import ContractError, DataError, DimensionError
from graphs.population import PopulationGraph
from model.mgmc import softmax_rows
from model.objective import cross_entropy_value, masked_cross_entropy
from model.spectral import ChebLayer, cheb_forward, glorot_uniform
from training.search import log_uniform
from training.trainer import TrainConfig, TrainingLog, run_full_batch
from utils.log import get_logger

logger = get_logger("baselines.classifiers")


@dataclass
class LabeledRows:
    """Class labels with the rows that train and validate a classifier."""

    labels: np.ndarray
    n_classes: int
    train_rows: np.ndarray
    val_rows: Optional[np.ndarray] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.train_rows = np.asarray(self.train_rows, dtype=bool)
        if self.val_rows is not None:
            self.val_rows = np.asarray(self.val_rows, dtype=bool)
        if self.train_rows.shape != self.labels.shape:
            raise DimensionError("train_rows and labels need one entry per row")
        present = np.unique(self.labels[self.train_rows])
        if len(present) < 2:
            raise DataError(f"training set has {len(present)} class(es); a classifier needs at least 2")

    def targets(self) -> tuple[np.ndarray, np.ndarray]:
        """One-hot targets and the label mask over training rows."""
        onehot = np.eye(self.n_classes)[self.labels]
        mask = np.repeat(self.train_rows[:, None], self.n_classes, axis=1).astype(np.float64)
        return onehot * mask, mask

    def val_loss(self, logits: np.ndarray, fallback: float) -> float:
        if self.val_rows is None or not self.val_rows.any():
            return fallback
        return cross_entropy_value(logits[self.val_rows], self.labels[self.val_rows])


# =============================================================================
# SOFTMAX REGRESSION
# =============================================================================


@dataclass
class SoftmaxClassifier:
    weights: np.ndarray
    bias: np.ndarray
    log: Optional[TrainingLog] = None

    def logits(self, features: np.ndarray) -> np.ndarray:
        if features.shape[1] != self.weights.shape[0]:
            raise DimensionError(f"features have {features.shape[1]} columns, model expects {self.weights.shape[0]}")
        return features @ self.weights + self.bias

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Class probabilities, rows summing to 1."""
        return softmax_rows(self.logits(features))


def softmax_regression(
    features: np.ndarray,
    rows: LabeledRows,
    lr: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    patience: int = DEFAULT_PATIENCE,
) -> SoftmaxClassifier:
    """
    Linear logits + softmax, fitted on the training rows only.

    Weights start at zero so the untrained model predicts 1/c everywhere.
    """
    if not np.all(np.isfinite(features)):
        raise ContractError("softmax_regression needs complete features; impute first")
    d, c = features.shape[1], rows.n_classes
    params = {"lr.W": np.zeros((d, c)), "lr.b": np.zeros((1, c))}
    targets, label_mask = rows.targets()

    def evaluate(values):
        tape = Tape()
        w, b = tape.parameter(values["lr.W"], "lr.W"), tape.parameter(values["lr.b"], "lr.b")
        logits = ops.add_rowvec(ops.matmul(tape.constant(features, "features"), w), b)
        loss = masked_cross_entropy(logits, targets, label_mask, 0)
        ce = float(loss.value[0, 0])
        return tape, loss, {"total": ce, "ce": ce}, rows.val_loss(logits.value, ce)

    best, log = run_full_batch(params, evaluate, lr, epochs, patience, label="lr")
    return SoftmaxClassifier(weights=best["lr.W"], bias=best["lr.b"], log=log)


# =============================================================================
# GCN CLASSIFIER
# =============================================================================


@dataclass
class GcnClassifier:
    layer: ChebLayer
    params: dict[str, np.ndarray]
    graph: PopulationGraph
    log: Optional[TrainingLog] = None

    @property
    def head_names(self) -> tuple[str, str]:
        return "gcn.head.W", "gcn.head.b"

    def _logits(self, tape: Tape, features: np.ndarray):
        nodes = {name: tape.parameter(value, name) for name, value in self.params.items()}
        hidden = cheb_forward(self.layer, nodes, self.graph.rescaled, tape.constant(features, "features"))
        w, b = (nodes[name] for name in self.head_names)
        return ops.add_rowvec(ops.matmul(hidden, w), b)

    def logits(self, features: np.ndarray) -> np.ndarray:
        return self._logits(Tape(), features).value

    def predict(self, features: np.ndarray) -> np.ndarray:
        return softmax_rows(self.logits(features))


def gcn_classifier(
    features: np.ndarray,
    graph: PopulationGraph,
    rows: LabeledRows,
    config: TrainConfig,
) -> GcnClassifier:
    """
    One Chebyshev layer (order config.K, width config.hidden, ReLU) and a
    linear head trained with cross-entropy on training rows. All rows take
    part in the graph filter.
    """
    if features.shape[0] != graph.n:
        raise DimensionError(f"{features.shape[0]} feature rows for a {graph.n}-node graph")
    rng = np.random.default_rng(config.seed)
    layer = ChebLayer(K=config.K, in_dim=features.shape[1], out_dim=config.hidden,
                      prefix="gcn.cheb", use_bias=config.use_bias)
    params = layer.init_params(rng)
    classifier = GcnClassifier(layer=layer, params=params, graph=graph)
    w_name, b_name = classifier.head_names
    params[w_name] = glorot_uniform(rng, config.hidden, rows.n_classes)
    params[b_name] = np.zeros((1, rows.n_classes))
    targets, label_mask = rows.targets()

    def evaluate(values):
        tape = Tape()
        logits = classifier._logits(tape, features)
        loss = masked_cross_entropy(logits, targets, label_mask, 0)
        ce = float(loss.value[0, 0])
        return tape, loss, {"total": ce, "ce": ce}, rows.val_loss(logits.value, ce)

    best, log = run_full_batch(params, evaluate, config.learning_rate, config.epochs, config.patience,
                               label=f"gcn[{graph.name}]")
    classifier.params = best
    classifier.log = log
    return classifier


# =============================================================================
# LEARNING-RATE SELECTION
# =============================================================================


def select_learning_rate(
    fit: Callable[[float], tuple[object, float]],
    budget: int,
    seed: int,
) -> tuple[object, float]:
    """
    Try `budget` log-uniform learning rates and keep the fit with the lowest
    validation loss. `fit(lr)` returns (model, validation loss).

    Returns:
        (best model, its learning rate)
    """
    if budget < 1:
        raise ContractError(f"learning-rate budget must be >= 1, got {budget}")
    rates = log_uniform(np.random.default_rng(seed), LEARNING_RATE_RANGE, size=budget)
    best_model, best_lr, best_loss = None, math.nan, math.inf
    for lr in rates:
        model, loss = fit(float(lr))
        if best_model is None or loss < best_loss:
            best_model, best_lr, best_loss = model, float(lr), loss
    logger.debug(f"Selected learning rate {best_lr:.3g} (val loss {best_loss:.6g})")
    return best_model, best_lr
