"""Artificial removal of observed feature entries."""

import numpy as np

from cohort.dataset import MaskedDataset
from errors import ContractError
from utils.log import get_logger

logger = get_logger("cohort.masking")


def retention_order(observed: np.ndarray, seed: int) -> np.ndarray:
    """Flat indices of observed entries in a seeded random order."""
    flat = np.flatnonzero(observed.ravel())
    return np.random.default_rng(seed).permutation(flat)


def apply_availability(dataset: MaskedDataset, level: float, seed: int) -> MaskedDataset:
    """
    Keep floor(level * N) of the N baseline-observed entries.

    The kept entries are a prefix of one seeded permutation, so for a fixed
    seed lower levels retain subsets of what higher levels retain. Label
    columns are not part of the feature matrix and are never touched.
    """
    if not 0 < level <= 1:
        raise ContractError(f"availability level must be in (0, 1], got {level}")

    order = retention_order(dataset.baseline_observed, seed)
    keep = int(np.floor(level * len(order)))
    observed = np.zeros(dataset.raw.size, dtype=bool)
    observed[order[:keep]] = True
    observed = observed.reshape(dataset.raw.shape)

    empty_rows = np.flatnonzero(~observed.any(axis=1))
    if len(empty_rows):
        logger.warning(f"Availability {level:.2f} leaves {len(empty_rows)} row(s) without observed features")
    logger.debug(f"Availability {level:.2f}: kept {keep} of {len(order)} observed entries")
    return dataset.with_observed(observed, level)
