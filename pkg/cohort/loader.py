"""
Dataset CSV ingestion and export.

A dataset is a CSV with a header row plus a JSON schema sidecar:

    {
      "label": "diagnosis",
      "classes": ["NC", "MCI", "AD"],          (optional)
      "columns": [
        {"name": "age", "role": "meta", "threshold": 2.0},
        {"name": "sex", "role": "meta", "categorical": true},
        {"name": "f0", "role": "feature"},
        ...
      ]
    }

Columns present in the file but absent from the schema are ignored.
Missing cells are empty or "NaN" (case-insensitive).
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from constants import DEFAULT_META_THRESHOLD, MISSING_TOKENS
from cohort.dataset import MaskedDataset
from errors import DataError, IngestionError, SchemaError
from graphs.population import MetaFeature
from utils.log import get_logger

logger = get_logger("cohort.loader")

VALID_ROLES = ["feature", "meta", "label"]


@dataclass(frozen=True)
class MetaColumn:
    name: str
    threshold: float = DEFAULT_META_THRESHOLD
    categorical: bool = False


@dataclass(frozen=True)
class DatasetSchema:
    """Column roles for one dataset file."""

    features: tuple
    metas: tuple
    label: str
    classes: Optional[tuple] = None

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetSchema":
        columns = data.get("columns")
        if not isinstance(columns, list) or not columns:
            raise SchemaError("schema needs a non-empty 'columns' list")

        features, metas, labels = [], [], []
        seen = set()
        for entry in columns:
            name = entry.get("name")
            role = entry.get("role")
            if not name:
                raise SchemaError(f"schema column without a name: {entry}")
            if name in seen:
                raise SchemaError(f"schema declares column '{name}' twice")
            seen.add(name)
            if role not in VALID_ROLES:
                raise SchemaError(f"column '{name}' has invalid role '{role}'. Valid: {', '.join(VALID_ROLES)}")
            if role == "feature":
                features.append(name)
            elif role == "label":
                labels.append(name)
            else:
                categorical = bool(entry.get("categorical", False))
                threshold = float(entry.get("threshold", 0.0 if categorical else DEFAULT_META_THRESHOLD))
                if threshold < 0:
                    raise SchemaError(f"meta column '{name}' has negative threshold {threshold}")
                metas.append(MetaColumn(name=name, threshold=threshold, categorical=categorical))

        label = data.get("label")
        if label is None and len(labels) == 1:
            label = labels[0]
        if label is None or (labels and label not in labels):
            raise SchemaError("schema must declare exactly one label column")
        if len(labels) > 1:
            raise SchemaError(f"schema declares {len(labels)} label columns; expected 1")
        if not features:
            raise SchemaError("schema declares no feature columns")

        classes = data.get("classes")
        return cls(
            features=tuple(features),
            metas=tuple(metas),
            label=label,
            classes=tuple(str(c) for c in classes) if classes else None,
        )

    def to_dict(self) -> dict:
        columns = [{"name": name, "role": "feature"} for name in self.features]
        for meta in self.metas:
            entry = {"name": meta.name, "role": "meta", "threshold": meta.threshold}
            if meta.categorical:
                entry["categorical"] = True
            columns.append(entry)
        columns.append({"name": self.label, "role": "label"})
        data = {"label": self.label, "columns": columns}
        if self.classes:
            data["classes"] = list(self.classes)
        return data


def load_schema(path: Union[str, Path]) -> DatasetSchema:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})")
    return DatasetSchema.from_dict(data)


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in MISSING_TOKENS


def _parse_numeric(column: pd.Series, name: str) -> np.ndarray:
    values = np.full(len(column), np.nan)
    for row, cell in enumerate(column):
        if _is_missing(cell):
            continue
        try:
            values[row] = float(cell)
        except ValueError:
            # +2: header line plus 1-based numbering
            raise DataError(f"line {row + 2}: column '{name}' has non-numeric value '{cell}'")
        if not np.isfinite(values[row]):
            raise DataError(f"line {row + 2}: column '{name}' has non-finite value '{cell}'")
    return values


def _encode_categories(column: pd.Series) -> np.ndarray:
    codes: dict[str, int] = {}
    values = np.full(len(column), np.nan)
    for row, cell in enumerate(column):
        if _is_missing(cell):
            continue
        values[row] = codes.setdefault(cell.strip(), len(codes))
    return values


def _encode_labels(column: pd.Series, declared: Optional[tuple]) -> tuple[np.ndarray, tuple]:
    classes: dict[str, int] = {name: i for i, name in enumerate(declared)} if declared else {}
    labels = np.zeros(len(column), dtype=np.int64)
    for row, cell in enumerate(column):
        cell = cell.strip()
        if _is_missing(cell):
            raise IngestionError(f"line {row + 2}: missing label")
        if cell not in classes:
            if declared:
                raise DataError(f"line {row + 2}: unknown label '{cell}'. Valid: {', '.join(declared)}")
            classes[cell] = len(classes)
        labels[row] = classes[cell]
    return labels, tuple(classes)


def load_csv(path: Union[str, Path], schema: Union[DatasetSchema, str, Path]) -> MaskedDataset:
    """
    Read a dataset file.

    Args:
        path: CSV with a header row
        schema: DatasetSchema or path to its JSON sidecar

    Returns:
        MaskedDataset without a split (standardization statistics cover
        all rows until one is assigned)
    """
    if not isinstance(schema, DatasetSchema):
        schema = load_schema(schema)

    try:
        frame = pd.read_csv(path, dtype=str, header=None, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: file is empty")
    if frame.empty:
        raise DataError(f"{path}: file is empty")
    header = [str(h).strip() for h in frame.iloc[0]]
    duplicates = sorted({h for h in header if header.count(h) > 1})
    if duplicates:
        raise SchemaError(f"{path}: duplicate header names: {', '.join(duplicates)}")
    body = frame.iloc[1:].reset_index(drop=True)
    body.columns = header
    if body.empty:
        raise DataError(f"{path}: no data rows")

    wanted = list(schema.features) + [m.name for m in schema.metas] + [schema.label]
    missing = [name for name in wanted if name not in header]
    if missing:
        raise SchemaError(f"{path}: schema columns not in file: {', '.join(missing)}")
    ignored = [h for h in header if h not in wanted]
    if ignored:
        logger.info(f"Ignoring {len(ignored)} column(s) not in schema: {', '.join(ignored)}")

    raw = np.column_stack([_parse_numeric(body[name], name) for name in schema.features])
    labels, class_names = _encode_labels(body[schema.label], schema.classes)

    metas = []
    for column in schema.metas:
        values = (_encode_categories(body[column.name]) if column.categorical
                  else _parse_numeric(body[column.name], column.name))
        metas.append(MetaFeature(column.name, values, threshold=column.threshold, categorical=column.categorical))

    logger.info(f"Loaded {path}: {raw.shape[0]} rows, {raw.shape[1]} features, "
                f"{len(class_names)} classes, {len(metas)} meta-features")
    return MaskedDataset.build(
        raw, labels, class_names, metas, feature_names=list(schema.features), name=Path(path).stem
    )


def dataset_schema(dataset: MaskedDataset, label: str = "label") -> DatasetSchema:
    return DatasetSchema(
        features=dataset.feature_names,
        metas=tuple(MetaColumn(m.name, m.threshold, m.categorical) for m in dataset.metas),
        label=label,
        classes=dataset.class_names,
    )


def _format_meta(meta: MetaFeature) -> list[str]:
    if meta.categorical:
        return ["" if np.isnan(v) else str(int(v)) for v in meta.values]
    return ["" if np.isnan(v) else repr(float(v)) for v in meta.values]


def write_dataset(dataset: MaskedDataset, out_dir: Union[str, Path], name: Optional[str] = None) -> dict[str, Path]:
    """
    Write <name>.csv, <name>.schema.json and, when known, <name>.truth.csv.

    Entries not currently observed are written as empty cells.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or dataset.name
    schema = dataset_schema(dataset)

    frame = pd.DataFrame(np.where(dataset.observed, dataset.raw, np.nan), columns=list(dataset.feature_names))
    for meta in dataset.metas:
        frame[meta.name] = _format_meta(meta)
    frame[schema.label] = [dataset.class_names[i] for i in dataset.labels]

    paths = {"csv": out_dir / f"{name}.csv", "schema": out_dir / f"{name}.schema.json"}
    frame.to_csv(paths["csv"], index=False, float_format="%.17g")
    with open(paths["schema"], "w") as f:
        json.dump(schema.to_dict(), f, indent=2)
        f.write("\n")

    if dataset.ground_truth is not None:
        paths["truth"] = out_dir / f"{name}.truth.csv"
        pd.DataFrame(dataset.ground_truth, columns=list(dataset.feature_names)).to_csv(
            paths["truth"], index=False, float_format="%.17g"
        )
    logger.info(f"Wrote dataset '{name}' to {out_dir}")
    return paths
