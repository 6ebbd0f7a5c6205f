#!/usr/bin/env python3
"""
Logging Test

Tests for the logger setup, the decorators and the iteration logger.
"""

import os
import shutil
import sys
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

# Add project to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.utils.config import LoggingConfig, get_config, load_config
from src.utils.logging import (
    IterationLogger,
    configure_logging,
    get_logger,
    handle_exceptions,
    log_execution,
)


class LoggingTest(unittest.TestCase):
    """Tests for the logging utilities."""

    @classmethod
    def setUpClass(cls):
        cls.test_dir = Path(tempfile.mkdtemp())

    @classmethod
    def tearDownClass(cls):
        configure_logging(get_config())
        shutil.rmtree(cls.test_dir)

    def test_01_logger_is_created_once(self):
        first = get_logger("tests.logging.once")
        second = get_logger("tests.logging.once")
        self.assertIs(first, second)
        self.assertEqual(len(first.handlers), len(second.handlers))
        self.assertFalse(first.propagate)

    def test_02_configure_logging_sets_level_and_file(self):
        logger = get_logger("tests.logging.file")
        cfg = replace(
            load_config(use_project_file=False),
            logging=LoggingConfig(log_level="DEBUG", log_file="run.log"),
            base_dir=self.test_dir,
        )
        configure_logging(cfg)
        logger.debug("debug line")
        for handler in logger.handlers:
            handler.flush()

        self.assertEqual(logger.level, 10)
        log_files = list((self.test_dir / "logs").glob("run_*.log"))
        self.assertEqual(len(log_files), 1)
        self.assertIn("debug line", log_files[0].read_text())

    def test_03_log_execution_returns_the_result(self):
        @log_execution
        def add(a, b):
            return a + b

        self.assertEqual(add(2, 3), 5)
        self.assertEqual(add.__name__, "add")

    def test_04_handle_exceptions_reraises(self):
        @handle_exceptions
        def broken():
            raise ValueError("bad value")

        with self.assertLogs(__name__, level="ERROR") as logs:
            with self.assertRaises(ValueError):
                broken()
        self.assertIn("ValueError: bad value", logs.output[0])

    def test_05_iteration_logger_tracks_the_best_value(self):
        progress = IterationLogger("test", max_iter=5, quantity="residual", log_every=2)
        for value in (1.0, 0.5, 0.25, 0.4):
            progress.record(value)
        self.assertEqual(progress.iterations, 4)
        self.assertEqual(progress.best_value, 0.25)
        self.assertEqual(progress.best_iteration, 3)
        self.assertEqual(progress.history, [1.0, 0.5, 0.25, 0.4])

        with self.assertLogs("progress.test", level="INFO") as logs:
            progress.complete("max_iter")
        self.assertIn("best residual 2.500e-01 at iteration 3", logs.output[0])
        self.assertIn("stop reason max_iter", logs.output[0])


if __name__ == "__main__":
    unittest.main()
