#!/usr/bin/env python3
"""
Schema migrations for the MGMC results store.

Applied automatically before any write; safe to re-run.

Usage:
    python migrations/migrate.py           # Apply all pending migrations
    python migrations/migrate.py --status  # Show migration status
    python migrations/migrate.py --rollback 2  # Undo migrations above version 2
    python migrations/migrate.py --db PATH # Operate on another store
"""

import argparse
import sqlite3
import sys
from pathlib import Path
from typing import Optional, Union

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from constants import DB_PATH
from errors import ConfigError
from utils.db import get_db_context
from utils.log import get_logger

logger = get_logger("migrations")

# Migration definitions: (version, name, up_sql, down_sql)
MIGRATIONS = [
    (1, "initial_schema", """
        CREATE TABLE IF NOT EXISTS schema_version (
            version INTEGER PRIMARY KEY,
            name TEXT NOT NULL,
            applied_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
        );
    """, "DROP TABLE IF EXISTS schema_version;"),

    (2, "create_runs", """
        -- One row per evaluate invocation
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
            command TEXT NOT NULL,
            dataset TEXT NOT NULL,
            seed INTEGER NOT NULL,
            config TEXT NOT NULL,
            out_dir TEXT
        );
    """, "DROP TABLE IF EXISTS runs;"),

    (3, "create_cells", """
        -- One row per (method, availability, fold); metrics are NULL when absent.
        -- status is 'ok' or 'failed'; error holds the failure message
        CREATE TABLE IF NOT EXISTS cells (
            run_id INTEGER NOT NULL REFERENCES runs(id),
            method TEXT NOT NULL,
            availability REAL NOT NULL,
            fold INTEGER NOT NULL,
            accuracy REAL,
            auc REAL,
            rmse REAL,
            status TEXT NOT NULL,
            error TEXT,
            PRIMARY KEY (run_id, method, availability, fold)
        );
    """, "DROP TABLE IF EXISTS cells;"),

    (4, "index_cells_by_method", """
        CREATE INDEX IF NOT EXISTS idx_cells_method ON cells(run_id, method, availability);
    """, "DROP INDEX IF EXISTS idx_cells_method;"),
]


def ensure_version_table(db: sqlite3.Connection):
    """Ensure schema_version table exists."""
    db.execute("""
        CREATE TABLE IF NOT EXISTS schema_version (
            version INTEGER PRIMARY KEY,
            name TEXT NOT NULL,
            applied_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
        )
    """)
    db.commit()


def get_current_version(db: sqlite3.Connection) -> int:
    """Get current schema version."""
    try:
        row = db.execute("SELECT MAX(version) as v FROM schema_version").fetchone()
        return row["v"] or 0
    except sqlite3.OperationalError:
        return 0


def get_pending_migrations(db: sqlite3.Connection) -> list:
    """Get list of migrations that haven't been applied."""
    current = get_current_version(db)
    return [(v, n, up, down) for v, n, up, down in MIGRATIONS if v > current]


def _execute_script(db: sqlite3.Connection, sql: str) -> None:
    # Strip comments before splitting; they may contain ';'
    body = "\n".join(line.split("--", 1)[0] for line in sql.splitlines())
    for statement in body.split(";"):
        statement = statement.strip()
        if statement:
            db.execute(statement)


def apply_migration(db: sqlite3.Connection, version: int, name: str, sql: str):
    """Apply a single migration."""
    logger.info(f"Applying migration {version}: {name}")
    _execute_script(db, sql)
    db.execute(
        "INSERT OR REPLACE INTO schema_version (version, name) VALUES (?, ?)",
        (version, name)
    )
    db.commit()


def migrate_connection(db: sqlite3.Connection) -> int:
    """Apply pending migrations on an open connection; returns the final version."""
    ensure_version_table(db)
    for version, name, up_sql, _ in get_pending_migrations(db):
        apply_migration(db, version, name, up_sql)
    return get_current_version(db)


def rollback_connection(db: sqlite3.Connection, target: int) -> int:
    """
    Undo applied migrations above `target`, newest first; returns the final version.

    Rolling back to 0 drops every table, schema_version included.

    Raises:
        ConfigError: target outside [0, current version]
    """
    current = get_current_version(db)
    if not 0 <= target <= current:
        raise ConfigError(f"rollback target must be in [0, {current}], got {target}")
    for version, name, _, down_sql in reversed(MIGRATIONS):
        if target < version <= current:
            logger.info(f"Rolling back migration {version}: {name}")
            db.execute("DELETE FROM schema_version WHERE version = ?", (version,))
            _execute_script(db, down_sql)
            db.commit()
    return get_current_version(db)


def migrate(db_path: Optional[Union[str, Path]] = None) -> int:
    """Create the store if needed and apply all pending migrations."""
    db_path = Path(db_path or DB_PATH)
    with get_db_context(db_path) as db:
        version = migrate_connection(db)
    logger.debug(f"Results store {db_path} at schema version {version}")
    return version


def rollback(db_path: Union[str, Path], target: int) -> int:
    """Roll an existing store back to `target`."""
    with get_db_context(db_path) as db:
        return rollback_connection(db, target)


def status(db_path: Path):
    """Show migration status."""
    if not db_path.exists():
        print(f"Database not found at {db_path}")
        return

    with get_db_context(db_path) as db:
        ensure_version_table(db)

        current = get_current_version(db)
        pending = get_pending_migrations(db)

        print(f"Current version: {current}")
        print(f"Latest version:  {MIGRATIONS[-1][0]}")
        print()

        applied = db.execute(
            "SELECT version, name, applied_at FROM schema_version ORDER BY version"
        ).fetchall()

        if applied:
            print("Applied migrations:")
            for row in applied:
                print(f"  v{row['version']}: {row['name']} ({row['applied_at']})")
        else:
            print("No migrations applied yet.")

        if pending:
            print(f"\nPending migrations ({len(pending)}):")
            for version, name, _, _ in pending:
                print(f"  v{version}: {name}")
        else:
            print("\nNo pending migrations.")


def main():
    parser = argparse.ArgumentParser(description="MGMC results store migrations")
    parser.add_argument("--status", action="store_true", help="Show migration status")
    parser.add_argument("--rollback", type=int, metavar="VERSION", help="Undo migrations above VERSION")
    parser.add_argument("--db", type=Path, default=DB_PATH, help="Results store path")
    args = parser.parse_args()

    if args.status:
        status(args.db)
    elif args.rollback is not None:
        if not args.db.exists():
            print(f"Database not found at {args.db}")
            sys.exit(1)
        try:
            version = rollback(args.db, args.rollback)
        except ConfigError as e:
            print(f"error: {e}", file=sys.stderr)
            sys.exit(e.exit_code)
        print(f"Database is at version {version}.")
    else:
        version = migrate(args.db)
        print(f"Database is at version {version}.")


if __name__ == "__main__":
    main()
