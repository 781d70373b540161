"""
Experiment report: per-cell metrics and their median/std aggregation.

Report files carry no timestamps, so a fixed-seed run writes the same bytes
every time.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd

from constants import METRIC_NAMES
from evaluation.metrics import MetricSet

CELL_COLUMNS = ["method", "availability", "fold", "accuracy", "auc", "rmse", "status", "error"]


def level_key(level: float) -> str:
    """Availability as a percentage string ("50" for 0.5, "2.5" for 0.025)."""
    return format(round(level * 100, 6), "g")


def _stat(values: list[float]) -> dict:
    if not values:
        return {"median": None, "std": None, "n": 0}
    arr = np.asarray(values, dtype=np.float64)
    return {"median": float(np.median(arr)), "std": float(np.std(arr)), "n": len(values)}


def summarize(cells: Iterable[dict]) -> dict:
    """
    {method: {level: {metric: {median, std, n}}}} over successful cells.

    Cells are plain dicts with the MetricSet fields, so rows read back from
    the results store aggregate the same way.
    """
    grouped: dict[str, dict[str, dict[str, list[float]]]] = {}
    for cell in cells:
        by_level = grouped.setdefault(cell["method"], {})
        metrics = by_level.setdefault(level_key(cell["availability"]), {name: [] for name in METRIC_NAMES})
        if cell["status"] != "ok":
            continue
        for name in METRIC_NAMES:
            value = cell.get(name)
            if value is not None and not (isinstance(value, float) and np.isnan(value)):
                metrics[name].append(float(value))

    return {
        method: {level: {name: _stat(values) for name, values in metrics.items()}
                 for level, metrics in levels.items()}
        for method, levels in grouped.items()
    }


@dataclass
class ExperimentReport:
    """All cells of one experiment plus the configuration that produced them."""

    seed: int
    methods: list[str]
    levels: list[float]
    folds: int
    config: dict
    cells: list[MetricSet] = field(default_factory=list)

    def sorted_cells(self) -> list[MetricSet]:
        order = {method: i for i, method in enumerate(self.methods)}
        return sorted(self.cells, key=lambda c: (order.get(c.method, len(order)), -c.availability, c.fold))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.to_dict() for c in self.sorted_cells()], columns=CELL_COLUMNS)

    def summary(self) -> dict:
        return summarize(c.to_dict() for c in self.sorted_cells())

    @property
    def failed(self) -> list[MetricSet]:
        return [c for c in self.cells if c.status != "ok"]

    def cell(self, method: str, availability: float, fold: int) -> Optional[MetricSet]:
        for c in self.cells:
            if c.method == method and c.availability == availability and c.fold == fold:
                return c
        return None

    def write(self, out_dir: Union[str, Path]) -> dict[str, Path]:
        """Write cells.csv and summary.json (summary embeds the config echo)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {"cells": out_dir / "cells.csv", "summary": out_dir / "summary.json"}

        self.to_frame().to_csv(paths["cells"], index=False, float_format="%.12g")
        payload = {
            "seed": self.seed,
            "folds": self.folds,
            "methods": self.methods,
            "levels": [level_key(level) for level in self.levels],
            "config": self.config,
            "summary": self.summary(),
        }
        with open(paths["summary"], "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        return paths
