"""Environment-backed settings for MGMC.

Values come from the process environment, optionally seeded from a `.env`
file in the working directory.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from constants import DATA_DIR, DB_PATH
from errors import ConfigError


@dataclass(frozen=True)
class Settings:
    """Process-wide settings."""

    data_dir: Path
    db_path: Path
    log_level: str
    workers: int


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'")
    if value <= 0:
        raise ConfigError(f"{name} must be a positive integer, got {value}")
    return value


def load_settings(env_file: Optional[Path] = None) -> Settings:
    """
    Build settings from the environment.

    Args:
        env_file: Optional explicit .env path (default: search from cwd)

    Returns:
        Settings instance
    """
    load_dotenv(dotenv_path=env_file, override=False)
    data_dir = Path(os.getenv("MGMC_DATA_DIR", str(DATA_DIR)))
    db_path = Path(os.getenv("MGMC_DB_PATH", str(data_dir / DB_PATH.name)))
    return Settings(
        data_dir=data_dir,
        db_path=db_path,
        log_level=os.getenv("MGMC_LOG_LEVEL", "INFO"),
        workers=_int_env("MGMC_WORKERS", 1),
    )
