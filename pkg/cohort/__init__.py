"""
Cohort data: features, labels, meta-features and masks.

- dataset: MaskedDataset and its standardized views
- loader: CSV + schema ingestion and export
- splits: stratified train/val/test assignment
- masking: nested artificial missingness
- synthetic: clustered low-rank generator
"""

from .dataset import MaskedDataset
from .loader import DatasetSchema, MetaColumn, load_csv, load_schema, write_dataset
from .masking import apply_availability
from .splits import assign_splits
from .synthetic import SyntheticSpec, generate_synthetic

__all__ = [
    "MaskedDataset",
    "DatasetSchema",
    "MetaColumn",
    "load_csv",
    "load_schema",
    "write_dataset",
    "apply_availability",
    "assign_splits",
    "SyntheticSpec",
    "generate_synthetic",
]
