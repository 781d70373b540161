"""
MaskedDataset: raw features, labels, meta-features, split and observation state.

Standardized views are derived on demand from the current training rows, so a
new split or a new availability level re-standardizes automatically.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np

from constants import SPLIT_TEST, SPLIT_TRAIN, SPLIT_UNASSIGNED, SPLIT_VAL
from errors import ContractError, DataError
from graphs.population import MetaFeature
from model.objective import MaskPair
from utils.log import get_logger

logger = get_logger("cohort.dataset")


@dataclass(frozen=True, eq=False)
class MaskedDataset:
    """
    Feature matrix with missing entries, labels and per-row meta-features.

    Attributes:
        raw: n x m raw feature values (NaN where never observed)
        baseline_observed: entries observed before any artificial removal
        observed: entries currently visible (Omega_x over features)
        labels: class index per row
        class_names: class label per index, first-appearance order
        feature_names: column names of raw
        metas: meta-features used for graph construction
        split: "train" / "val" / "test" per row ("" before assignment)
        ground_truth: noise-free features (synthetic data only)
        availability: fraction of baseline-observed entries kept
    """

    raw: np.ndarray
    baseline_observed: np.ndarray
    observed: np.ndarray
    labels: np.ndarray
    class_names: tuple
    feature_names: tuple
    metas: tuple
    split: np.ndarray
    ground_truth: Optional[np.ndarray] = None
    availability: float = 1.0
    name: str = field(default="dataset")

    def __post_init__(self):
        n, m = self.raw.shape
        if n < 1 or m < 1:
            raise DataError(f"dataset needs rows and features, got shape {self.raw.shape}")
        if len(self.class_names) < 2:
            raise DataError(f"dataset needs at least 2 classes, got {len(self.class_names)}")
        for label, arr in (("baseline_observed", self.baseline_observed), ("observed", self.observed)):
            if arr.shape != (n, m):
                raise DataError(f"{label} has shape {arr.shape}, expected {(n, m)}")
        if (self.observed & ~self.baseline_observed).any():
            raise ContractError("observed entries must be a subset of baseline-observed entries")
        if self.labels.shape != (n,) or self.split.shape != (n,):
            raise DataError("labels and split need one entry per row")
        for meta in self.metas:
            if meta.values.shape != (n,):
                raise DataError(f"meta-feature '{meta.name}' has {meta.values.shape[0]} values for {n} rows")

    @classmethod
    def build(
        cls,
        raw: np.ndarray,
        labels: np.ndarray,
        class_names,
        metas,
        feature_names=None,
        ground_truth: Optional[np.ndarray] = None,
        name: str = "dataset",
    ) -> "MaskedDataset":
        raw = np.asarray(raw, dtype=np.float64)
        observed = np.isfinite(raw)
        n, m = raw.shape
        return cls(
            raw=np.where(observed, raw, np.nan),
            baseline_observed=observed,
            observed=observed.copy(),
            labels=np.asarray(labels, dtype=np.int64),
            class_names=tuple(str(c) for c in class_names),
            feature_names=tuple(feature_names or (f"f{j}" for j in range(m))),
            metas=tuple(metas),
            split=np.full(n, SPLIT_UNASSIGNED, dtype="<U5"),
            ground_truth=ground_truth,
            name=name,
        )

    # =========================================================================
    # SHAPE AND SPLIT
    # =========================================================================

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def m(self) -> int:
        return self.raw.shape[1]

    @property
    def c(self) -> int:
        return len(self.class_names)

    @property
    def has_split(self) -> bool:
        return bool((self.split != SPLIT_UNASSIGNED).all())

    @property
    def train_rows(self) -> np.ndarray:
        return self.split == SPLIT_TRAIN

    @property
    def val_rows(self) -> np.ndarray:
        return self.split == SPLIT_VAL

    @property
    def test_rows(self) -> np.ndarray:
        return self.split == SPLIT_TEST

    @property
    def stats_rows(self) -> np.ndarray:
        """Rows whose observed entries define standardization (all rows before a split)."""
        train = self.train_rows
        return train if train.any() else np.ones(self.n, dtype=bool)

    @property
    def held_out(self) -> np.ndarray:
        """Entries removed by artificial masking."""
        return self.baseline_observed & ~self.observed

    def with_split(self, split: np.ndarray) -> "MaskedDataset":
        return replace(self, split=np.asarray(split, dtype="<U5"))

    def with_observed(self, observed: np.ndarray, availability: float) -> "MaskedDataset":
        return replace(self, observed=np.asarray(observed, dtype=bool), availability=float(availability))

    # =========================================================================
    # STANDARDIZED VIEWS
    # =========================================================================

    @cached_property
    def column_stats(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-column mean and std over observed entries of the statistics rows."""
        mask = self.observed & self.stats_rows[:, None]
        counts = mask.sum(axis=0)
        values = np.where(mask, self.raw, 0.0)
        mean = np.divide(values.sum(axis=0), counts, out=np.zeros(self.m), where=counts > 0)
        centered = np.where(mask, self.raw - mean, 0.0)
        var = np.divide((centered ** 2).sum(axis=0), counts, out=np.zeros(self.m), where=counts > 0)
        std = np.sqrt(var)
        std[std == 0] = 1.0

        empty = np.flatnonzero(counts == 0)
        if len(empty):
            logger.warning(f"{len(empty)} feature column(s) have no observed training entries; "
                           f"standardized with mean 0, std 1")
        return mean, std

    def standardize(self, values: np.ndarray) -> np.ndarray:
        mean, std = self.column_stats
        return (values - mean) / std

    @cached_property
    def features(self) -> np.ndarray:
        """Standardized X with unobserved entries set to 0."""
        return np.where(self.observed, self.standardize(np.where(self.observed, self.raw, 0.0)), 0.0)

    @cached_property
    def truth(self) -> np.ndarray:
        """Standardized true values of baseline-observed entries (0 elsewhere)."""
        return np.where(self.baseline_observed,
                        self.standardize(np.where(self.baseline_observed, self.raw, 0.0)), 0.0)

    @cached_property
    def onehot(self) -> np.ndarray:
        return np.eye(self.c)[self.labels]

    @property
    def z(self) -> np.ndarray:
        """[features | one-hot labels on training rows, zeros elsewhere]."""
        return np.hstack([self.features, self.onehot * self.train_rows[:, None]])

    @property
    def masks(self) -> MaskPair:
        n, m, c = self.n, self.m, self.c
        omega_x = np.hstack([self.observed.astype(np.float64), np.zeros((n, c))])
        omega_y = np.hstack([np.zeros((n, m)), np.repeat(self.train_rows[:, None], c, axis=1).astype(np.float64)])
        return MaskPair(omega_x=omega_x, omega_y=omega_y, n_features=m)

    def meta_matrix(self) -> np.ndarray:
        """n x I standardized meta values (over statistics rows) for baseline inputs."""
        if not self.metas:
            return np.zeros((self.n, 0))
        columns = []
        rows = self.stats_rows
        for meta in self.metas:
            values = np.nan_to_num(meta.values)
            mean = values[rows].mean()
            std = values[rows].std() or 1.0
            columns.append((values - mean) / std)
        return np.column_stack(columns)
