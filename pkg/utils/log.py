"""Loggers for the mgmc package.

Everything logs under the "mgmc" root. Records go to stderr so command
output on stdout (tables, JSON) stays clean to pipe.
"""

import logging
import sys
from typing import Optional, Union

from errors import ConfigError

ROOT = "mgmc"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _parse_level(level: Union[int, str]) -> int:
    if isinstance(level, int):
        return level
    value = logging.getLevelName(level.strip().upper())
    if not isinstance(value, int):
        raise ConfigError(f"Unknown log level '{level}'. Use DEBUG, INFO, WARNING or ERROR")
    return value


def setup_logging(
    name: str = ROOT,
    level: Union[int, str] = logging.INFO,
    format_string: Optional[str] = None,
) -> logging.Logger:
    """Attach one stderr handler to `name` (once) and set its level.

    Raises:
        ConfigError: unknown level name
    """
    logger = logging.getLogger(name)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(format_string or LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(handler)
    logger.setLevel(_parse_level(level))
    return logger


def get_logger(name: str) -> logging.Logger:
    """Logger for a module, e.g. get_logger("training.trainer") -> mgmc.training.trainer."""
    return logging.getLogger(f"{ROOT}.{name}")


logger = setup_logging()
