"""
Training machinery.

- adam: optimizer state and update
- trainer: TrainConfig, TrainingLog, the shared full-batch loop, train()
- search: seeded random hyperparameter search
"""

from .adam import AdamState, adam_step
from .search import SearchResult, SearchSpace, hyper_search
from .trainer import TrainConfig, TrainingLog, run_full_batch, train

__all__ = [
    "AdamState",
    "adam_step",
    "SearchResult",
    "SearchSpace",
    "hyper_search",
    "TrainConfig",
    "TrainingLog",
    "run_full_batch",
    "train",
]
