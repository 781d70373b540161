"""
Evaluation.

- metrics: accuracy, one-vs-rest ROC-AUC, masked RMSE
- harness: repeated-holdout experiment over methods and availability levels
- report: per-cell table and median/std summary
- store: sqlite recording of experiment runs
"""

from .harness import ExperimentOptions, run_experiment, run_method
from .metrics import MetricSet, accuracy, binary_auc, masked_rmse, roc_auc
from .report import ExperimentReport, summarize

__all__ = [
    "ExperimentOptions",
    "run_experiment",
    "run_method",
    "MetricSet",
    "accuracy",
    "binary_auc",
    "masked_rmse",
    "roc_auc",
    "ExperimentReport",
    "summarize",
]
