"""Classification and imputation metrics."""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from errors import ContractError, DimensionError
from utils.log import get_logger

logger = get_logger("evaluation.metrics")


@dataclass(frozen=True)
class MetricSet:
    """Scores for one (method, availability, fold) cell."""

    method: str
    availability: float
    fold: int
    accuracy: Optional[float] = None
    auc: Optional[float] = None
    rmse: Optional[float] = None
    status: str = "ok"
    error: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DimensionError(f"accuracy: {predicted.shape} predictions for {truth.shape} labels")
    if predicted.size == 0:
        raise ContractError("accuracy of an empty set is undefined")
    return float((predicted == truth).mean())


def binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """
    Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie), via midranks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ContractError("AUC needs at least one positive and one negative sample")
    ranks = rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc(scores: np.ndarray, truth: np.ndarray) -> float:
    """
    One-vs-rest macro AUC over the classes present in `truth`.

    Args:
        scores: n x c class scores
        truth: n class indices
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.ndim != 2 or scores.shape[0] != truth.shape[0]:
        raise DimensionError(f"roc_auc: scores {scores.shape} do not match {truth.shape[0]} labels")
    present = np.unique(truth)
    if len(present) < 2:
        raise ContractError(f"roc_auc needs at least 2 classes in truth, got {len(present)}")

    absent = [k for k in range(scores.shape[1]) if k not in present]
    if absent:
        logger.warning(f"Classes {absent} absent from truth; skipped in macro AUC")
    per_class = [binary_auc(scores[:, k], truth == k) for k in present]
    return float(np.mean(per_class))


def masked_rmse(predicted: np.ndarray, truth: np.ndarray, held_out: np.ndarray) -> Optional[float]:
    """RMSE over held-out entries; None when nothing was held out."""
    held_out = np.asarray(held_out, dtype=bool)
    if predicted.shape != truth.shape or held_out.shape != truth.shape:
        raise DimensionError(f"masked_rmse: shapes {predicted.shape}, {truth.shape}, {held_out.shape} differ")
    if not held_out.any():
        return None
    diff = predicted[held_out] - truth[held_out]
    return float(np.sqrt(np.mean(diff ** 2)))
