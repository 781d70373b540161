"""Shared utilities for MGMC."""

from .config import Settings, load_settings
from .db import get_db_context
from .log import get_logger, setup_logging

__all__ = ["Settings", "load_settings", "get_db_context", "get_logger", "setup_logging"]
