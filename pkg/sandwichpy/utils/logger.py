"""
sandwichpy Logger Utility
Simple logging wrapper shared by every component.
"""

import logging
import sys
from typing import Optional

LOGGER_NAME = "sandwichpy"

_logger = logging.getLogger(LOGGER_NAME)
_logger.addHandler(logging.NullHandler())


class SandwichLogger:
    """Simple logger for sandwichpy components."""

    @staticmethod
    def configure(level: int = logging.INFO, stream=None) -> None:
        """
        Install a single stream handler on the package logger.

        Args:
            level: Logging level for the package logger
            stream: Target stream (defaults to stderr)
        """
        for handler in list(_logger.handlers):
            if not isinstance(handler, logging.NullHandler):
                _logger.removeHandler(handler)
        handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        _logger.addHandler(handler)
        _logger.setLevel(level)

    @staticmethod
    def debug(message: str, component: str = "sandwichpy"):
        """Log a debug message."""
        _logger.debug(f"[{component}] {message}")

    @staticmethod
    def info(message: str, component: str = "sandwichpy"):
        """Log an info message."""
        _logger.info(f"[{component}] {message}")

    @staticmethod
    def warning(message: str, component: str = "sandwichpy"):
        """Log a warning message."""
        _logger.warning(f"[{component}] WARNING: {message}")

    @staticmethod
    def error(message: str, component: str = "sandwichpy", exception: Optional[Exception] = None):
        """Log an error message."""
        error_msg = f"[{component}] ERROR: {message}"
        if exception:
            error_msg += f" - {type(exception).__name__}: {str(exception)}"
        _logger.error(error_msg)
