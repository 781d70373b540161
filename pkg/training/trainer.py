"""
Full-batch transductive training.

Every epoch builds a fresh tape over all rows: test-row features take part in
graph diffusion while their labels stay outside Omega_y. Early stopping
watches cross-entropy on validation rows and the best parameters are
restored at the end.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from autodiff.tape import DiffNode, Tape
from constants import (
    CHEB_ORDER_RANGE,
    DEFAULT_ATTENTION_WIDTH,
    DEFAULT_CHEB_ORDER,
    DEFAULT_EPOCHS,
    DEFAULT_GAMMA,
    DEFAULT_HIDDEN_UNITS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_PATIENCE,
    DEFAULT_UNROLL_STEPS,
    FUSION_MODES,
    FUSION_SCOPES,
    GAMMA_RANGE,
    HIDDEN_UNITS_RANGE,
    LEARNING_RATE_RANGE,
)
from cohort.dataset import MaskedDataset
from errors import ConfigError, ContractError, DataError
from graphs.population import PopulationGraph
from model.mgmc import MgmcModel, ModelSpec
from model.objective import LossWeights, cross_entropy_value, mgmc_terms
from model.recurrent import GcnInputHook
from training.adam import AdamState, adam_step
from utils.log import get_logger

logger = get_logger("training.trainer")

LOG_COLUMNS = ["epoch", "total", "dirichlet", "frobenius", "ce", "val_loss"]


def _check_range(name: str, value: float, bounds: tuple) -> None:
    low, high = bounds
    if not low <= value <= high:
        raise ConfigError(f"{name} must be in [{low}, {high}], got {value}")


@dataclass(frozen=True)
class TrainConfig:
    """Model and optimizer hyperparameters for one training run."""

    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    patience: int = DEFAULT_PATIENCE
    T: int = DEFAULT_UNROLL_STEPS
    K: int = DEFAULT_CHEB_ORDER
    hidden: int = DEFAULT_HIDDEN_UNITS
    gamma_a: float = DEFAULT_GAMMA
    gamma_b: float = DEFAULT_GAMMA
    gamma_c: float = DEFAULT_GAMMA
    seed: int = 0
    autoregressive: bool = False
    attention_width: int = DEFAULT_ATTENTION_WIDTH
    fusion_mode: str = "additive"
    fusion_scope: str = "row"
    use_bias: bool = True

    def __post_init__(self):
        _check_range("learning_rate", self.learning_rate, LEARNING_RATE_RANGE)
        _check_range("K", self.K, CHEB_ORDER_RANGE)
        _check_range("hidden", self.hidden, HIDDEN_UNITS_RANGE)
        # 0 switches a term off; anything else must lie in the search range
        for name in ("gamma_a", "gamma_b", "gamma_c"):
            value = getattr(self, name)
            if value != 0:
                _check_range(name, value, GAMMA_RANGE)
        for name in ("epochs", "patience", "T", "attention_width"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.fusion_mode not in FUSION_MODES:
            raise ConfigError(f"Invalid fusion_mode '{self.fusion_mode}'. Valid: {', '.join(FUSION_MODES)}")
        if self.fusion_scope not in FUSION_SCOPES:
            raise ConfigError(f"Invalid fusion_scope '{self.fusion_scope}'. Valid: {', '.join(FUSION_SCOPES)}")
        self.loss_weights()

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.gamma_a, self.gamma_b, self.gamma_c)

    def model_spec(self, n_features: int, n_classes: int, n_graphs: int) -> ModelSpec:
        return ModelSpec(
            n_features=n_features,
            n_classes=n_classes,
            n_graphs=n_graphs,
            K=self.K,
            T=self.T,
            hidden=self.hidden,
            attention_width=self.attention_width,
            fusion_mode=self.fusion_mode,
            fusion_scope=self.fusion_scope,
            autoregressive=self.autoregressive,
            use_bias=self.use_bias,
        )

    def with_updates(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TrainConfig":
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})")
        return cls.from_dict(data)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path


@dataclass
class TrainingLog:
    """Per-epoch loss record."""

    rows: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf

    def append(self, epoch: int, terms: dict[str, float], val_loss: float) -> None:
        self.rows.append({
            "epoch": epoch,
            "total": terms.get("total", math.nan),
            "dirichlet": terms.get("dirichlet", math.nan),
            "frobenius": terms.get("frobenius", math.nan),
            "ce": terms.get("ce", math.nan),
            "val_loss": val_loss,
        })

    @property
    def epochs_run(self) -> int:
        return len(self.rows)

    @property
    def last_epoch(self) -> int:
        return self.rows[-1]["epoch"] if self.rows else -1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=LOG_COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


# (tape, loss node, logged term values, validation loss)
EpochResult = tuple[Tape, DiffNode, dict[str, float], float]


def run_full_batch(
    params: dict[str, np.ndarray],
    evaluate: Callable[[dict[str, np.ndarray]], EpochResult],
    learning_rate: float,
    epochs: int,
    patience: int,
    label: str = "model",
) -> tuple[dict[str, np.ndarray], TrainingLog]:
    """
    Shared epoch loop: evaluate, log, track the best validation loss, step.

    `params` is updated in place. The returned dict holds the parameters
    that produced the best validation loss; the validation loss of an
    epoch is measured before that epoch's update.
    """
    state = AdamState()
    log = TrainingLog()
    best_params = {name: value.copy() for name, value in params.items()}
    since_best = 0

    for epoch in range(epochs):
        tape, loss, terms, val_loss = evaluate(params)
        grads = tape.backward(loss)
        log.append(epoch, terms, val_loss)
        logger.debug(f"[{label}] epoch {epoch}: total={terms.get('total', math.nan):.6g} val={val_loss:.6g}")

        if val_loss < log.best_val_loss:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best_params = {name: value.copy() for name, value in params.items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= patience:
                logger.debug(f"[{label}] early stop at epoch {epoch}, best epoch {log.best_epoch}")
                break

        adam_step(state, params, grads, learning_rate, epoch=epoch)

    return best_params, log


def check_trainable(dataset: MaskedDataset) -> None:
    """Require an assigned split and every class among the training labels."""
    if not dataset.has_split:
        raise ContractError("dataset has no train/val/test split; call assign_splits first")
    present = set(np.unique(dataset.labels[dataset.train_rows]).tolist())
    absent = [dataset.class_names[k] for k in range(dataset.c) if k not in present]
    if absent:
        raise DataError(f"classes without training rows: {', '.join(absent)}")


def train(
    dataset: MaskedDataset,
    graphs: Sequence[PopulationGraph],
    config: TrainConfig,
    on_step: Optional[GcnInputHook] = None,
) -> tuple[MgmcModel, TrainingLog]:
    """
    Fit an MgmcModel with one branch per graph.

    Returns:
        (model holding the best-validation parameters, TrainingLog)
    """
    check_trainable(dataset)
    if not graphs:
        raise ContractError("train needs at least one graph")

    spec = config.model_spec(dataset.m, dataset.c, len(graphs))
    model = MgmcModel(spec, seed=config.seed)
    weights = config.loss_weights()
    z = dataset.z
    masks = dataset.masks
    laplacians = [graph.laplacian for graph in graphs]
    val_rows = np.flatnonzero(dataset.val_rows)
    val_labels = dataset.labels[val_rows]
    m = dataset.m

    def evaluate(params: dict[str, np.ndarray]) -> EpochResult:
        tape = Tape()
        result = model.forward(tape, z, graphs, on_step=on_step)
        terms = mgmc_terms(result.branch_outputs, result.fused, z, masks, laplacians, weights)
        values = terms.values()
        if len(val_rows):
            val_loss = cross_entropy_value(result.fused.value[val_rows, m:], val_labels)
        else:
            val_loss = values["total"]
        return tape, terms.total, values, val_loss

    logger.info(f"Training {spec.n_graphs}-graph model ({model.parameter_count} parameters) "
                f"on {int(dataset.train_rows.sum())} labeled rows")
    best, log = run_full_batch(
        model.params, evaluate, config.learning_rate, config.epochs, config.patience,
        label=f"mgmc x{spec.n_graphs}",
    )
    model.load_params(best)
    logger.info(f"Finished after {log.epochs_run} epochs; best epoch {log.best_epoch}, "
                f"val loss {log.best_val_loss:.6g}")
    return model, log
