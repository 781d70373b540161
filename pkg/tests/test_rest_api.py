"""Tests for REST API endpoints."""

from pathlib import Path
import sys

import pytest
from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).parent.parent))

from evaluation.metrics import MetricSet
from evaluation.report import ExperimentReport
from evaluation.store import record_run
from rest_api import app

client = TestClient(app)


@pytest.fixture
def stored_run(tmp_path, monkeypatch):
    """A results store with one two-cell run, wired into the app."""
    db_path = tmp_path / "results.db"
    report = ExperimentReport(
        seed=0,
        methods=["mgmc"],
        levels=[0.5],
        folds=2,
        config={"K": 3, "T": 10},
        cells=[
            MetricSet("mgmc", 0.5, 0, accuracy=0.75, auc=0.8, rmse=0.6),
            MetricSet("mgmc", 0.5, 1, accuracy=0.85, auc=0.9, rmse=0.5),
        ],
    )
    run_id = record_run(db_path, report, dataset="synthetic_s0")
    monkeypatch.setattr(app.state, "db_path", db_path)
    return run_id


class TestHealthEndpoint:
    """Tests for health check endpoint."""

    def test_health_returns_ok(self):
        """Health endpoint should return status ok."""
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "service": "mgmc"}


class TestRootEndpoint:
    """Tests for root endpoint."""

    def test_root_returns_api_info(self):
        """Root endpoint should return API info."""
        response = client.get("/")
        assert response.status_code == 200
        data = response.json()
        assert data["service"] == "MGMC Results API"
        assert "runs" in data["endpoints"]


class TestRunsEndpoint:
    """Tests for /api/v1/runs."""

    def test_lists_runs(self, stored_run):
        """Recorded runs are listed with their config."""
        response = client.get("/api/v1/runs")
        assert response.status_code == 200
        data = response.json()
        assert data["count"] == 1
        assert data["runs"][0]["id"] == stored_run
        assert data["runs"][0]["config"]["K"] == 3

    def test_invalid_limit(self, stored_run):
        """limit must be positive."""
        response = client.get("/api/v1/runs", params={"limit": 0})
        assert response.status_code == 422


class TestRunDetailEndpoint:
    """Tests for /api/v1/runs/{run_id}."""

    def test_known_run(self, stored_run):
        """A run comes back with its cells."""
        response = client.get(f"/api/v1/runs/{stored_run}")
        assert response.status_code == 200
        data = response.json()
        assert data["dataset"] == "synthetic_s0"
        assert [c["fold"] for c in data["cells"]] == [0, 1]

    def test_unknown_run(self, stored_run):
        """Unknown ids return 404."""
        response = client.get("/api/v1/runs/999")
        assert response.status_code == 404


class TestSummaryEndpoint:
    """Tests for /api/v1/runs/{run_id}/summary."""

    def test_summary(self, stored_run):
        """Medians aggregate the stored cells."""
        response = client.get(f"/api/v1/runs/{stored_run}/summary")
        assert response.status_code == 200
        accuracy = response.json()["summary"]["mgmc"]["50"]["accuracy"]
        assert accuracy["median"] == pytest.approx(0.8)
        assert accuracy["n"] == 2

    def test_unknown_run(self, stored_run):
        """Unknown ids return 404."""
        assert client.get("/api/v1/runs/999/summary").status_code == 404
