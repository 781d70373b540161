"""Stratified train / validation / test assignment."""

import numpy as np

from constants import (
    MIN_STRATUM_SIZE,
    SPLIT_TEST,
    SPLIT_TRAIN,
    SPLIT_VAL,
    TEST_FRACTION,
    VAL_FRACTION,
)
from cohort.dataset import MaskedDataset
from errors import ContractError
from utils.log import get_logger

logger = get_logger("cohort.splits")

MIN_SPLIT_ROWS = 10


def allocate(total: int, sizes: list[int]) -> list[int]:
    """
    Split `total` across strata proportionally to `sizes` (largest remainder).

    Leftover units go to the largest fractional parts, earlier strata first
    on ties.
    """
    population = sum(sizes)
    if population == 0:
        return [0] * len(sizes)
    shares = [total * size / population for size in sizes]
    quotas = [int(np.floor(s)) for s in shares]
    leftover = total - sum(quotas)
    order = sorted(range(len(sizes)), key=lambda i: (-(shares[i] - quotas[i]), i))
    for i in order[:leftover]:
        quotas[i] += 1
    return quotas


def _strata(labels: np.ndarray, n_classes: int) -> list[np.ndarray]:
    strata, pooled, small = [], [], []
    for k in range(n_classes):
        members = np.flatnonzero(labels == k)
        if len(members) == 0:
            continue
        if len(members) < MIN_STRATUM_SIZE:
            pooled.append(members)
            small.append(k)
        else:
            strata.append(members)
    if pooled:
        logger.warning(f"Classes {small} have fewer than {MIN_STRATUM_SIZE} members; "
                       f"splitting them unstratified")
        strata.append(np.sort(np.concatenate(pooled)))
    return strata


def assign_splits(dataset: MaskedDataset, seed: int) -> MaskedDataset:
    """
    Assign 10% of rows to test and 10% of the remainder to validation.

    Counts are floored globally (rounding favors train) and distributed over
    classes by largest remainder, so each class keeps its share within one
    member.
    """
    n = dataset.n
    if n < MIN_SPLIT_ROWS:
        raise ContractError(f"assign_splits needs at least {MIN_SPLIT_ROWS} rows, got {n}")

    n_test = int(np.floor(TEST_FRACTION * n))
    n_val = int(np.floor(VAL_FRACTION * (n - n_test)))

    strata = _strata(dataset.labels, dataset.c)
    sizes = [len(s) for s in strata]
    test_quota = allocate(n_test, sizes)
    val_quota = allocate(n_val, [size - q for size, q in zip(sizes, test_quota)])

    rng = np.random.default_rng(seed)
    split = np.full(n, SPLIT_TRAIN, dtype="<U5")
    for members, q_test, q_val in zip(strata, test_quota, val_quota):
        shuffled = rng.permutation(members)
        split[shuffled[:q_test]] = SPLIT_TEST
        split[shuffled[q_test:q_test + q_val]] = SPLIT_VAL

    logger.debug(f"Split seed={seed}: {n - n_test - n_val} train, {n_val} val, {n_test} test")
    return dataset.with_split(split)
