"""
Reference imputers: column mean and k-nearest-neighbour.

Both keep observed entries bitwise. Column means come from training rows
only, so validation and test rows never shape the fill values.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import ContractError, DimensionError
from utils.log import get_logger

logger = get_logger("baselines.imputers")


@dataclass(frozen=True)
class ImputedMatrix:
    """Filled matrix plus the mask of entries that were imputed."""

    values: np.ndarray
    imputed: np.ndarray


def _check_inputs(x: np.ndarray, observed: np.ndarray, train_rows: Optional[np.ndarray]) -> np.ndarray:
    if x.ndim != 2 or x.shape != observed.shape:
        raise DimensionError(f"features {x.shape} and mask {observed.shape} must be equal 2-D shapes")
    if train_rows is None:
        return np.ones(x.shape[0], dtype=bool)
    train_rows = np.asarray(train_rows, dtype=bool)
    if train_rows.shape != (x.shape[0],):
        raise DimensionError(f"train_rows has shape {train_rows.shape}, expected ({x.shape[0]},)")
    return train_rows


def column_means(x: np.ndarray, observed: np.ndarray, train_rows: Optional[np.ndarray] = None) -> np.ndarray:
    """Mean of observed training-row entries per column; 0 for columns with none."""
    train_rows = _check_inputs(x, observed, train_rows)
    mask = observed.astype(bool) & train_rows[:, None]
    counts = mask.sum(axis=0)
    sums = np.where(mask, x, 0.0).sum(axis=0)
    empty = counts == 0
    if empty.any():
        logger.warning(f"{int(empty.sum())} column(s) have no observed training entries; filling with 0")
    return np.divide(sums, counts, out=np.zeros(x.shape[1]), where=~empty)


def mean_impute(x: np.ndarray, observed: np.ndarray, train_rows: Optional[np.ndarray] = None) -> ImputedMatrix:
    """Replace every unobserved entry with its column's training-row mean."""
    observed = np.asarray(observed, dtype=bool)
    means = column_means(x, observed, train_rows)
    filled = np.where(observed, x, means[None, :])
    return ImputedMatrix(values=filled, imputed=~observed)


def overlap_distances(x: np.ndarray, observed: np.ndarray, row: int) -> np.ndarray:
    """
    Squared Euclidean distance from `row` to every row over mutually
    observed coordinates, divided by the overlap count. Rows sharing no
    observed coordinate (and `row` itself) get +inf.
    """
    shared = observed & observed[row]
    overlap = shared.sum(axis=1)
    diff = np.where(shared, x - x[row], 0.0)
    dist = np.full(x.shape[0], np.inf)
    has = overlap > 0
    dist[has] = (diff[has] ** 2).sum(axis=1) / overlap[has]
    dist[row] = np.inf
    return dist


def knn_impute(
    x: np.ndarray,
    observed: np.ndarray,
    k: int,
    train_rows: Optional[np.ndarray] = None,
) -> ImputedMatrix:
    """
    Fill (r, c) with the mean of column c over the k nearest rows observing c.

    Neighbours are ranked by overlap-normalized distance with ties broken by
    row index. An entry with no eligible neighbour falls back to the column
    mean of training rows.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    observed = np.asarray(observed, dtype=bool)
    train_rows = _check_inputs(x, observed, train_rows)
    n = x.shape[0]
    if k > n - 1:
        logger.warning(f"k={k} exceeds n-1={n - 1}; clamping")
        k = max(n - 1, 1)

    fallback = None
    filled = np.where(observed, x, 0.0)
    for r in np.flatnonzero(~observed.all(axis=1)):
        dist = overlap_distances(x, observed, r)
        order = np.argsort(dist, kind="stable")
        for c in np.flatnonzero(~observed[r]):
            eligible = order[observed[order, c] & np.isfinite(dist[order])]
            neighbours = eligible[:k]
            if len(neighbours):
                filled[r, c] = x[neighbours, c].mean()
            else:
                if fallback is None:
                    fallback = column_means(x, observed, train_rows)
                filled[r, c] = fallback[c]
    return ImputedMatrix(values=filled, imputed=~observed)


IMPUTERS = ["mean", "knn"]


def impute(method: str, x: np.ndarray, observed: np.ndarray, k: int, train_rows=None) -> ImputedMatrix:
    if method == "mean":
        return mean_impute(x, observed, train_rows)
    if method == "knn":
        return knn_impute(x, observed, k, train_rows)
    raise ContractError(f"Unknown imputer '{method}'. Valid: {', '.join(IMPUTERS)}")
