#!/usr/bin/env python3
"""
Tests for logging configuration in logging_config.py.

Tests the CompactFloatFormatter and logging setup functionality.

Run: python tests/test_logging.py
"""

import importlib
import logging
import logging.handlers
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import config
from logging_config import CompactFloatFormatter, get_logger, setup_logging


class TestCompactFloats(unittest.TestCase):
    """Test CompactFloatFormatter class."""

    def setUp(self):
        """Set up formatter for testing."""
        self.formatter = CompactFloatFormatter('%(levelname)s - %(message)s')

    def _format_message(self, message, *args):
        """Create and format a log record with the given message."""
        record = logging.LogRecord(
            name="test",
            level=logging.INFO,
            pathname="test.py",
            lineno=1,
            msg=message,
            args=args,
            exc_info=None
        )
        return self.formatter.format(record)

    def test_long_float_shortened(self):
        """Test float literals are cut to six decimals."""
        result = self._format_message("residual %s", 0.123456789012)
        self.assertIn("0.123456", result)
        self.assertNotIn("0.1234567", result)

    def test_exponent_kept(self):
        """Test the exponent survives the shortening."""
        result = self._format_message("residual %r", 1.2345678912345e-12)
        self.assertIn("1.234567e-12", result)

    def test_short_float_unchanged(self):
        """Test short literals are left alone."""
        result = self._format_message("lambda=0.03125")
        self.assertIn("lambda=0.03125", result)

    def test_floats_inside_lists(self):
        """Test every literal of a dumped list is shortened."""
        result = self._format_message("%s", [0.333333333333, -0.666666666666])
        self.assertIn("[0.333333, -0.666666]", result)

    def test_integers_and_names_unchanged(self):
        """Test messages without floats are not modified."""
        message = "interp3d: 41 generators from 33 certificate terms"
        self.assertIn(message, self._format_message(message))


class TestGetLogger(unittest.TestCase):
    """Test get_logger() function."""

    def test_logger_name_preserved(self):
        """Test logger name is preserved."""
        logger = get_logger("sdp_frame")
        self.assertIsInstance(logger, logging.Logger)
        self.assertEqual(logger.name, "sdp_frame")

    def test_same_name_returns_same_logger(self):
        """Test same name returns same logger instance."""
        self.assertIs(get_logger("verify"), get_logger("verify"))


class TestLoggingSetup(unittest.TestCase):
    """Test setup_logging() function."""

    def setUp(self):
        """Store original logging state."""
        self.original_handlers = logging.root.handlers.copy()
        self.original_level = logging.root.level

    def tearDown(self):
        """Restore original logging state."""
        logging.root.handlers = self.original_handlers
        logging.root.level = self.original_level
        importlib.reload(config)

    @patch.dict(os.environ, {"LOGGING_ENABLED": "false"})
    def test_disabled_logging_minimal(self):
        """Test disabled logging uses minimal configuration."""
        logging.root.handlers = []
        importlib.reload(config)
        setup_logging()
        self.assertEqual(logging.root.level, logging.WARNING)

    @patch.dict(os.environ, {"LOGGING_ENABLED": "true", "LOGGING_CONSOLE": "true",
                             "LOGGING_TO_FILE": "false"})
    def test_console_handler_on_stderr(self):
        """Test the console handler writes to stderr, leaving stdout for JSON."""
        importlib.reload(config)
        setup_logging()
        streams = [h.stream for h in logging.root.handlers if isinstance(h, logging.StreamHandler)]
        self.assertEqual(streams, [sys.stderr])

    @patch.dict(os.environ, {"LOGGING_ENABLED": "true", "LOGGING_CONSOLE": "false",
                             "LOGGING_TO_FILE": "false"})
    def test_explicit_level_wins(self):
        """Test the level argument (CLI --verbose) overrides LOGGING_LEVEL."""
        importlib.reload(config)
        setup_logging("DEBUG")
        self.assertEqual(logging.root.level, logging.DEBUG)

    def test_file_handler_rotates(self):
        """Test file logging installs a rotating handler in the configured directory."""
        with tempfile.TemporaryDirectory() as tmp:
            log_file = Path(tmp) / "nested" / "uepframe.log"
            env = {"LOGGING_ENABLED": "true", "LOGGING_CONSOLE": "false",
                   "LOGGING_TO_FILE": "true", "LOGGING_FILE": str(log_file)}
            with patch.dict(os.environ, env):
                importlib.reload(config)
                setup_logging()
                handlers = [h for h in logging.root.handlers
                            if isinstance(h, logging.handlers.RotatingFileHandler)]
                self.assertEqual(len(handlers), 1)
                self.assertTrue(log_file.parent.exists())
                self.assertIsInstance(handlers[0].formatter, CompactFloatFormatter)
                for handler in handlers:
                    handler.close()

    @patch.dict(os.environ, {"LOGGING_ENABLED": "true", "LOGGING_CONSOLE": "true",
                             "LOGGING_TO_FILE": "false", "LOG_FULL_PRECISION": "true"})
    def test_full_precision_uses_plain_formatter(self):
        """Test LOG_FULL_PRECISION keeps every digit."""
        importlib.reload(config)
        setup_logging()
        formatter = logging.root.handlers[0].formatter
        self.assertNotIsInstance(formatter, CompactFloatFormatter)


if __name__ == "__main__":
    unittest.main()
