"""
Comparison methods.

- imputers: mean and kNN imputation
- classifiers: softmax regression and a single-graph GCN on imputed features
"""

from .classifiers import (
    GcnClassifier,
    LabeledRows,
    SoftmaxClassifier,
    gcn_classifier,
    select_learning_rate,
    softmax_regression,
)
from .imputers import IMPUTERS, ImputedMatrix, impute, knn_impute, mean_impute

__all__ = [
    "GcnClassifier",
    "LabeledRows",
    "SoftmaxClassifier",
    "gcn_classifier",
    "select_learning_rate",
    "softmax_regression",
    "IMPUTERS",
    "ImputedMatrix",
    "impute",
    "knn_impute",
    "mean_impute",
]
