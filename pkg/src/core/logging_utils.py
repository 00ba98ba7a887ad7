import logging
import os
from typing import Optional, Union

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(threadName)s | %(name)s | %(message)s"

_LOGGING_CONFIGURED = False


def _resolve_level(value: Union[str, int, None] = None) -> int:
    """Level from an int, a level name, or CMNL_LOG_LEVEL (default INFO)."""
    if isinstance(value, int):
        return value
    name = (value or os.getenv("CMNL_LOG_LEVEL", "INFO")).strip().upper()
    return getattr(logging, name, logging.INFO)


def _configure_root_logger() -> None:
    global _LOGGING_CONFIGURED
    if _LOGGING_CONFIGURED:
        return

    handlers = [logging.StreamHandler()]
    log_file = os.getenv("CMNL_LOG_FILE", "").strip()
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(level=_resolve_level(), format=LOG_FORMAT, handlers=handlers)
    _LOGGING_CONFIGURED = True


def set_log_level(level: Union[str, int]) -> None:
    """Override the env-derived level, e.g. from the CLI's --log-level flag."""
    _configure_root_logger()
    logging.getLogger().setLevel(_resolve_level(level))


def get_logger(name: Optional[str] = None) -> logging.Logger:
    _configure_root_logger()
    return logging.getLogger(name or "cmnl")
