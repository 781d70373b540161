#!/usr/bin/env python3
"""
REST API for MGMC experiment results.

Read-only HTTP access to the runs recorded by `mgmc evaluate`.

Usage:
    uvicorn rest_api:app --host 0.0.0.0 --port 8000

Endpoints:
    GET /api/v1/runs?limit=50
    GET /api/v1/runs/{run_id}
    GET /api/v1/runs/{run_id}/summary
    GET /health

Rate Limits:
    - 60 requests per minute per IP for listings and single runs
    - 10 requests per minute for summaries (aggregated on request)
"""

from fastapi import FastAPI, HTTPException, Query, Request, status
from fastapi.middleware.cors import CORSMiddleware
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address

from errors import DataError
from evaluation.store import get_run, list_runs, run_summary
from utils.config import load_settings

# Rate limiter setup - uses IP address for identification
limiter = Limiter(key_func=get_remote_address)

app = FastAPI(
    title="MGMC Results API",
    description="""
Experiment results for multigraph geometric matrix completion.

Exposes recorded runs with per-cell accuracy, ROC-AUC and imputation RMSE,
plus median/std summaries per method and availability level.

Rate Limits: 60 req/min for standard endpoints, 10 req/min for summaries.
    """,
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc"
)

app.state.db_path = load_settings().db_path

# Register rate limiter with app
app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,  # Cannot use credentials with wildcard origins
    allow_methods=["GET"],    # Read-only API
    allow_headers=["*"],
)


def _not_found(run_id: int) -> HTTPException:
    return HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"run {run_id} not found")


@app.get("/api/v1/runs")
@limiter.limit("60/minute")
def runs(
    request: Request,
    limit: int = Query(50, ge=1, le=1000, description="Maximum number of runs, newest first"),
):
    """List recorded runs, newest first."""
    result = list_runs(request.app.state.db_path, limit=limit)
    return {"count": len(result), "runs": result}


@app.get("/api/v1/runs/{run_id}")
@limiter.limit("60/minute")
def run_detail(request: Request, run_id: int):
    """One run with its configuration echo and every cell."""
    try:
        return get_run(request.app.state.db_path, run_id)
    except DataError:
        raise _not_found(run_id)


@app.get("/api/v1/runs/{run_id}/summary")
@limiter.limit("10/minute")
def run_detail_summary(request: Request, run_id: int):
    """
    Median and std per method, availability level and metric.

    Same shape as the `summary` block of summary.json.
    """
    try:
        return {"run_id": run_id, "summary": run_summary(request.app.state.db_path, run_id)}
    except DataError:
        raise _not_found(run_id)


@app.get("/health")
def health_check():
    """Health check endpoint for monitoring."""
    return {"status": "ok", "service": "mgmc"}


@app.get("/")
def root():
    """Root endpoint with API info."""
    return {
        "service": "MGMC Results API",
        "version": "1.0.0",
        "docs": "/docs",
        "endpoints": {
            "runs": "/api/v1/runs?limit=50",
            "run": "/api/v1/runs/{run_id}",
            "summary": "/api/v1/runs/{run_id}/summary",
        }
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
