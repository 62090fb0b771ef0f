"""
Logging configuration for the uepframe command line tool.

Provides file and console logging. Long floating point literals in messages
(residual dumps, coefficient lists) are shortened unless full precision is requested.
Library modules only create loggers; handlers are installed here, by the CLI.
"""

import logging
import logging.handlers
import re
import sys
from pathlib import Path
from typing import Optional


class CompactFloatFormatter(logging.Formatter):
    """Formatter that trims floating point literals to a fixed number of significant digits."""

    # Mantissas with more digits than this are cut; exponents are kept
    SIGNIFICANT_DIGITS = 6
    FLOAT_PATTERN = re.compile(r'(?<![\w.])(-?\d+\.\d{%d})\d+' % SIGNIFICANT_DIGITS)

    def format(self, record):
        """Format log record and shorten float literals."""
        msg = super().format(record)
        return self.FLOAT_PATTERN.sub(r'\1', msg)


def setup_logging(level: Optional[str] = None):
    """
    Configure logging for the uepframe CLI.

    Sets up:
    - Console logging on stderr (stdout carries JSON output)
    - Optional file logging with rotation at 10MB
    - Float shortening unless LOG_FULL_PRECISION is set
    """
    from config import (
        LOGGING_ENABLED,
        LOGGING_FILE,
        LOGGING_LEVEL,
        LOGGING_CONSOLE,
        LOGGING_TO_FILE,
        LOG_FULL_PRECISION,
    )

    effective_level = (level or LOGGING_LEVEL).upper()

    if not LOGGING_ENABLED:
        # Minimal logging if disabled
        logging.basicConfig(level=logging.WARNING)
        return

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, effective_level, logging.INFO))

    # Clear any existing handlers
    root_logger.handlers = []

    log_format = '%(asctime)s [%(levelname)-8s] %(name)s - %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    if LOG_FULL_PRECISION:
        formatter = logging.Formatter(log_format, datefmt=date_format)
    else:
        formatter = CompactFloatFormatter(log_format, datefmt=date_format)

    if LOGGING_TO_FILE:
        log_file = Path(LOGGING_FILE)
        try:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_file,
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=5,
                encoding='utf-8',
            )
            file_handler.setLevel(getattr(logging, effective_level, logging.INFO))
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except OSError as e:
            print(f"Warning: Could not set up file logging: {e}", file=sys.stderr)

    if LOGGING_CONSOLE:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, effective_level, logging.INFO))
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

    logger = logging.getLogger(__name__)
    logger.debug("Logging configured - Level: %s, File: %s", effective_level,
                 LOGGING_FILE if LOGGING_TO_FILE else "disabled")


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a module."""
    return logging.getLogger(name)
