"""Tests for metrics and report aggregation."""

import json
from pathlib import Path
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from errors import ContractError, DimensionError
from evaluation.metrics import MetricSet, accuracy, binary_auc, masked_rmse, roc_auc
from evaluation.report import CELL_COLUMNS, ExperimentReport, level_key, summarize


def pair_counting_auc(scores, positive):
    """Fraction of positive/negative pairs ordered correctly, ties counting half."""
    pos, neg = scores[positive], scores[~positive]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


class TestAccuracy:
    """Fraction of matching labels."""

    def test_identical(self):
        """Identical vectors score 1."""
        assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0

    def test_disjoint(self):
        """No matches score 0."""
        assert accuracy([1, 0], [0, 1]) == 0.0

    def test_partial(self):
        """[0,1,1,0] vs [0,1,0,0] scores 0.75."""
        assert accuracy([0, 1, 1, 0], [0, 1, 0, 0]) == 0.75

    def test_empty(self):
        """Accuracy of nothing is undefined."""
        with pytest.raises(ContractError):
            accuracy([], [])

    def test_length_mismatch(self):
        """Predictions and labels must align."""
        with pytest.raises(DimensionError):
            accuracy([0, 1], [0])


class TestAuc:
    """Mann-Whitney AUC."""

    def test_perfect_order(self):
        """Positives above negatives score 1."""
        assert binary_auc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([False, False, True, True])) == 1.0

    def test_all_ties(self):
        """Equal scores give 0.5."""
        assert binary_auc(np.ones(6), np.array([True, False] * 3)) == 0.5

    def test_matches_pair_counting(self):
        """50 random binary instances match brute-force pair counting."""
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(10, 200))
            scores = np.round(rng.random(n), 2)
            positive = rng.random(n) < 0.4
            positive[0], positive[1] = True, False
            assert binary_auc(scores, positive) == pytest.approx(pair_counting_auc(scores, positive), abs=1e-12)

    def test_macro_over_classes(self):
        """roc_auc averages one-vs-rest AUCs."""
        rng = np.random.default_rng(1)
        scores = rng.random((30, 3))
        truth = np.arange(30) % 3
        expected = np.mean([pair_counting_auc(scores[:, k], truth == k) for k in range(3)])
        assert roc_auc(scores, truth) == pytest.approx(expected, abs=1e-12)

    def test_absent_class_skipped(self):
        """Classes missing from truth do not enter the average."""
        scores = np.array([[0.9, 0.1, 0.0], [0.2, 0.8, 0.0], [0.7, 0.3, 0.0], [0.1, 0.9, 0.0]])
        truth = np.array([0, 1, 0, 1])
        assert roc_auc(scores, truth) == 1.0

    def test_single_class(self):
        """One class in truth cannot be scored."""
        with pytest.raises(ContractError):
            roc_auc(np.ones((3, 2)), np.zeros(3, dtype=int))


class TestMaskedRmse:
    """Held-out reconstruction error."""

    def test_exact(self):
        """Perfect reconstruction scores 0."""
        x = np.arange(6.0).reshape(2, 3)
        assert masked_rmse(x, x, np.ones((2, 3), dtype=bool)) == 0.0

    def test_single_entry(self):
        """One held-out entry off by 2 scores 2."""
        truth = np.zeros((2, 2))
        predicted = truth.copy()
        predicted[1, 0] = 2.0
        held_out = np.zeros((2, 2), dtype=bool)
        held_out[1, 0] = True
        assert masked_rmse(predicted, truth, held_out) == 2.0

    def test_nothing_held_out(self):
        """No held-out entries gives None."""
        assert masked_rmse(np.ones((2, 2)), np.zeros((2, 2)), np.zeros((2, 2), dtype=bool)) is None


def _report():
    cells = [
        MetricSet("lr+mean", 1.0, 1, accuracy=0.5, auc=0.6, rmse=None),
        MetricSet("mgmc", 0.5, 0, accuracy=0.8, auc=0.9, rmse=0.7),
        MetricSet("lr+mean", 1.0, 0, accuracy=0.7, auc=0.8, rmse=None),
        MetricSet("mgmc", 0.5, 1, status="failed", error="boom"),
    ]
    return ExperimentReport(seed=3, methods=["mgmc", "lr+mean"], levels=[1.0, 0.5], folds=2,
                            config={"K": 3}, cells=cells)


class TestReport:
    """Cell table and summary."""

    def test_level_key(self):
        """Levels render as whole percentages."""
        assert [level_key(v) for v in (1.0, 0.75, 0.5, 0.25)] == ["100", "75", "50", "25"]

    def test_level_key_fractional_percent(self):
        """Sub-percent levels keep their decimals instead of collapsing to 0."""
        assert level_key(0.01) == "1"
        assert level_key(0.005) == "0.5"
        assert level_key(0.29) == "29"

    def test_summary_skips_failed_cells(self):
        """Medians use successful cells; failed cells still register their method and level."""
        summary = _report().summary()
        assert summary["lr+mean"]["100"]["accuracy"] == {"median": 0.6, "std": pytest.approx(0.1), "n": 2}
        assert summary["lr+mean"]["100"]["rmse"]["n"] == 0
        assert summary["mgmc"]["50"]["accuracy"]["n"] == 1
        assert _report().failed[0].error == "boom"

    def test_cells_are_sorted(self):
        """Cells follow method order, then descending level, then fold."""
        frame = _report().to_frame()
        assert list(frame.columns) == CELL_COLUMNS
        assert frame[["method", "fold"]].values.tolist() == [["mgmc", 0], ["mgmc", 1], ["lr+mean", 0], ["lr+mean", 1]]

    def test_lookup(self):
        """cell() finds a cell by its coordinates."""
        assert _report().cell("lr+mean", 1.0, 1).accuracy == 0.5
        assert _report().cell("gmc", 1.0, 0) is None

    def test_write(self, tmp_path):
        """Writes the cell table and a summary echoing the configuration."""
        paths = _report().write(tmp_path)
        frame = pd.read_csv(paths["cells"])
        assert len(frame) == 4
        payload = json.loads(paths["summary"].read_text())
        assert payload["config"] == {"K": 3}
        assert payload["levels"] == ["100", "50"]

    def test_summarize_plain_dicts(self):
        """summarize accepts rows read back from storage."""
        rows = [{"method": "gmc", "availability": 0.25, "fold": 0, "accuracy": 0.4,
                 "auc": None, "rmse": float("nan"), "status": "ok"}]
        summary = summarize(rows)
        assert summary["gmc"]["25"]["accuracy"]["median"] == 0.4
        assert summary["gmc"]["25"]["rmse"]["n"] == 0
