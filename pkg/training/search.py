"""
Seeded random hyperparameter search.

All trial configurations are drawn up front from one generator, so the
sampled sequence depends only on the seed. Trials run in a thread pool and
are merged back by trial index.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from constants import (
    CHEB_ORDER_RANGE,
    DEFAULT_SEARCH_BUDGET,
    GAMMA_RANGE,
    HIDDEN_UNITS_RANGE,
    LEARNING_RATE_RANGE,
)
from cohort.dataset import MaskedDataset
from errors import ConfigError, MgmcError
from graphs.population import PopulationGraph
from training.trainer import TrainConfig, train
from utils.log import get_logger

logger = get_logger("training.search")

TRIAL_COLUMNS = [
    "trial", "learning_rate", "K", "hidden", "gamma_a", "gamma_b", "gamma_c",
    "val_loss", "best_epoch", "status", "error",
]


def log_uniform(rng: np.random.Generator, bounds: tuple, size: Optional[int] = None):
    low, high = bounds
    return np.exp(rng.uniform(np.log(low), np.log(high), size=size))


@dataclass(frozen=True)
class SearchSpace:
    """
    Sampling ranges. K follows Python range semantics (upper bound
    exclusive); hidden is inclusive on both ends.
    """

    learning_rate: tuple = LEARNING_RATE_RANGE
    K: tuple = CHEB_ORDER_RANGE
    hidden: tuple = HIDDEN_UNITS_RANGE
    gamma: tuple = GAMMA_RANGE
    search_gammas: bool = True

    def sample(self, rng: np.random.Generator, base: TrainConfig) -> TrainConfig:
        changes = {
            "learning_rate": float(log_uniform(rng, self.learning_rate)),
            "K": int(rng.integers(self.K[0], self.K[1])),
            "hidden": int(rng.integers(self.hidden[0], self.hidden[1] + 1)),
        }
        gammas = log_uniform(rng, self.gamma, size=3)
        if self.search_gammas:
            changes.update(gamma_a=float(gammas[0]), gamma_b=float(gammas[1]), gamma_c=float(gammas[2]))
        return base.with_updates(**changes)


@dataclass
class SearchResult:
    best: TrainConfig
    best_val_loss: float
    trials: pd.DataFrame

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.trials.to_csv(path, index=False, float_format="%.17g")
        return path


def sample_configs(space: SearchSpace, base: TrainConfig, budget: int, seed: int) -> list[TrainConfig]:
    if budget < 1:
        raise ConfigError(f"search budget must be >= 1, got {budget}")
    rng = np.random.default_rng(seed)
    return [space.sample(rng, base) for _ in range(budget)]


def hyper_search(
    dataset: MaskedDataset,
    graphs: Sequence[PopulationGraph],
    space: Optional[SearchSpace] = None,
    budget: int = DEFAULT_SEARCH_BUDGET,
    seed: int = 0,
    base: Optional[TrainConfig] = None,
    workers: int = 1,
) -> SearchResult:
    """
    Train one model per sampled config and keep the lowest validation loss.

    Failed trials score +inf and are recorded with their error. Ties go to
    the earlier trial.
    """
    space = space or SearchSpace()
    base = base or TrainConfig(seed=seed)
    configs = sample_configs(space, base, budget, seed)
    logger.info(f"Random search: {budget} trials, seed={seed}, workers={workers}")

    def run_trial(index: int) -> dict:
        config = configs[index]
        row = {
            "trial": index,
            "learning_rate": config.learning_rate,
            "K": config.K,
            "hidden": config.hidden,
            "gamma_a": config.gamma_a,
            "gamma_b": config.gamma_b,
            "gamma_c": config.gamma_c,
        }
        try:
            _, log = train(dataset, graphs, config)
            row.update(val_loss=log.best_val_loss, best_epoch=log.best_epoch, status="ok", error="")
        except MgmcError as e:
            logger.warning(f"Trial {index} failed: {e}")
            row.update(val_loss=math.inf, best_epoch=-1, status="failed", error=str(e))
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_trial, range(budget)))
    else:
        rows = [run_trial(i) for i in range(budget)]
    rows.sort(key=lambda r: r["trial"])

    trials = pd.DataFrame(rows, columns=TRIAL_COLUMNS)
    scores = trials["val_loss"].to_numpy()
    if not np.isfinite(scores).any():
        raise ConfigError(f"all {budget} search trials failed; first error: {rows[0]['error']}")
    best_index = int(np.argmin(scores))
    logger.info(f"Best trial {best_index}: val loss {scores[best_index]:.6g}")
    return SearchResult(best=configs[best_index], best_val_loss=float(scores[best_index]), trials=trials)
