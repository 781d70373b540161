"""sqlite results store: experiment runs and their cells."""

import json
from pathlib import Path
from typing import Optional, Union

from errors import DataError
from evaluation.report import CELL_COLUMNS, ExperimentReport, summarize
from migrations.migrate import migrate_connection
from utils.db import get_db_context
from utils.log import get_logger

logger = get_logger("evaluation.store")


def record_run(
    db_path: Union[str, Path],
    report: ExperimentReport,
    dataset: str,
    command: str = "evaluate",
    out_dir: Optional[Union[str, Path]] = None,
) -> int:
    """Insert the run and all of its cells; returns the new run id."""
    with get_db_context(db_path) as db:
        migrate_connection(db)
        cursor = db.execute(
            "INSERT INTO runs (command, dataset, seed, config, out_dir) VALUES (?, ?, ?, ?, ?)",
            (command, dataset, report.seed, json.dumps(report.config, sort_keys=True),
             str(out_dir) if out_dir else None),
        )
        run_id = cursor.lastrowid
        db.executemany(
            """INSERT INTO cells (run_id, method, availability, fold, accuracy, auc, rmse, status, error)
               VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)""",
            [(run_id, c.method, c.availability, c.fold, c.accuracy, c.auc, c.rmse, c.status, c.error)
             for c in report.sorted_cells()],
        )
        db.commit()
    logger.info(f"Recorded run {run_id} ({len(report.cells)} cells) in {db_path}")
    return run_id


def _run_dict(row) -> dict:
    run = dict(row)
    run["config"] = json.loads(run["config"])
    return run


def list_runs(db_path: Union[str, Path], limit: int = 50) -> list[dict]:
    with get_db_context(db_path) as db:
        migrate_connection(db)
        rows = db.execute(
            "SELECT id, created_at, command, dataset, seed, config, out_dir FROM runs ORDER BY id DESC LIMIT ?",
            (limit,),
        ).fetchall()
    return [_run_dict(row) for row in rows]


def get_run(db_path: Union[str, Path], run_id: int) -> dict:
    """
    Run metadata plus its cells.

    Raises:
        DataError: unknown run id
    """
    with get_db_context(db_path) as db:
        migrate_connection(db)
        row = db.execute(
            "SELECT id, created_at, command, dataset, seed, config, out_dir FROM runs WHERE id = ?",
            (run_id,),
        ).fetchone()
        if row is None:
            raise DataError(f"run {run_id} not found")
        cells = db.execute(
            f"SELECT {', '.join(CELL_COLUMNS)} FROM cells WHERE run_id = ? "
            "ORDER BY method, availability DESC, fold",
            (run_id,),
        ).fetchall()
    run = _run_dict(row)
    run["cells"] = [dict(cell) for cell in cells]
    return run


def run_summary(db_path: Union[str, Path], run_id: int) -> dict:
    """Median/std aggregation of a stored run, same shape as summary.json."""
    return summarize(get_run(db_path, run_id)["cells"])
