#!/usr/bin/env python3
"""
Logging Module

This module provides centralized logging setup and utilities for the toolkit:
module loggers bound to the run configuration, timing decorators and an
iteration logger for convergence loops.
"""

import os
import sys
import logging
import functools
import math
import time
import traceback
from datetime import datetime
from pathlib import Path
from typing import Callable, List, Optional, Set

from .config import LoggingConfig, RunConfig, get_config

DETAILED_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
SIMPLE_FORMAT = '%(levelname)s - %(message)s'

# Loggers handed out by get_logger, so that configure_logging can reach them all
_configured_loggers: Set[str] = set()


class _ConsoleHandler(logging.StreamHandler):
    """Stream handler that writes to the current sys.stdout."""

    @property
    def stream(self):
        return sys.stdout

    @stream.setter
    def stream(self, value):
        pass


def _dated_log_path(logs_dir: Path, log_file: str) -> Path:
    today = datetime.now().strftime('%Y-%m-%d')
    base_name, extension = os.path.splitext(log_file)
    return logs_dir / f"{base_name}_{today}{extension or '.log'}"


def _attach_handlers(logger: logging.Logger, settings: LoggingConfig, logs_dir: Path) -> None:
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = _ConsoleHandler()
    console_handler.setFormatter(logging.Formatter(SIMPLE_FORMAT))
    logger.addHandler(console_handler)

    if settings.log_file:
        logs_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(_dated_log_path(logs_dir, settings.log_file))
        file_handler.setFormatter(logging.Formatter(DETAILED_FORMAT))

        # In production mode, only log WARNING and above to file
        if settings.mode == 'production':
            file_handler.setLevel(logging.WARNING)

        logger.addHandler(file_handler)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger with the specified name.

    The console handler is always attached. A date-based log file in the
    project's ``logs/`` directory is added when ``LOG_FILE`` is configured.

    Args:
        name (str): Logger name

    Returns:
        logging.Logger: Configured logger
    """
    logger = logging.getLogger(name)

    if name not in _configured_loggers:
        config = get_config()
        logger.setLevel(config.logging.log_level)
        logger.propagate = False
        _attach_handlers(logger, config.logging, config.logs_dir)
        _configured_loggers.add(name)

    return logger


def configure_logging(config: RunConfig) -> None:
    """
    Re-apply the logging settings of a resolved run configuration.

    Loggers are created at import time from the project configuration; a
    command that resolves its own configuration (``--config``, ``--log-level``)
    calls this so that level, log file and console stream follow it.

    Args:
        config (RunConfig): Resolved configuration of the run
    """
    for name in _configured_loggers:
        logger = logging.getLogger(name)
        logger.setLevel(config.logging.log_level)
        _attach_handlers(logger, config.logging, config.logs_dir)


def log_execution(function: Callable) -> Callable:
    """
    Decorator to log function execution with timing.

    Args:
        function (Callable): The function to decorate

    Returns:
        Callable: Decorated function
    """
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        logger = get_logger(function.__module__)
        func_name = function.__name__

        logger.debug(f"Starting {func_name}")
        start_time = time.perf_counter()

        try:
            result = function(*args, **kwargs)
        except Exception as e:
            logger.error(f"{func_name} failed after {time.perf_counter() - start_time:.2f} s: {e}")
            logger.debug(f"Traceback: {traceback.format_exc()}")
            raise

        logger.info(f"Completed {func_name} in {time.perf_counter() - start_time:.2f} s")
        return result

    return wrapper


def handle_exceptions(function: Callable) -> Callable:
    """
    Decorator to log an exception with its traceback and re-raise it.

    Args:
        function (Callable): The function to decorate

    Returns:
        Callable: Decorated function
    """
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        try:
            return function(*args, **kwargs)
        except Exception as e:
            logger = get_logger(function.__module__)
            logger.error(f"Error in {function.__name__}: {type(e).__name__}: {e}")
            logger.debug(f"Traceback: {traceback.format_exc()}")
            raise

    return wrapper


class IterationLogger:
    """
    Logger for a convergence loop that monitors one decreasing quantity.

    Every recorded value is kept; a progress line is logged at DEBUG level
    every ``log_every`` iterations and a summary with the best value and
    its iteration at INFO level on completion.
    """

    def __init__(self, name: str, max_iter: int, quantity: str = "value", log_every: int = 10):
        """
        Initialize the iteration logger.

        Args:
            name (str): Name of the loop
            max_iter (int): Iteration cap of the loop
            quantity (str): Name of the monitored quantity in log lines
            log_every (int): Iterations between two progress lines
        """
        self.logger = get_logger(f"progress.{name}")
        self.name = name
        self.max_iter = max_iter
        self.quantity = quantity
        self.log_every = max(1, log_every)
        self.history: List[float] = []
        self.best_value = math.inf
        self.best_iteration = 0
        self.start_time = time.perf_counter()

        self.logger.debug(f"Starting {name} with at most {max_iter} iterations")

    @property
    def iterations(self) -> int:
        return len(self.history)

    def record(self, value: float, additional_info: str = "") -> None:
        """
        Record the monitored value of the iteration just finished.

        Args:
            value (float): Monitored value
            additional_info (str): Additional information to log
        """
        self.history.append(value)
        if value < self.best_value:
            self.best_value = value
            self.best_iteration = self.iterations

        if self.iterations % self.log_every == 0 or self.iterations == self.max_iter:
            elapsed = time.perf_counter() - self.start_time
            message = (
                f"{self.name}: iteration {self.iterations}/{self.max_iter}, "
                f"{self.quantity} {value:.3e} ({elapsed:.2f} s)"
            )
            if additional_info:
                message += f" - {additional_info}"
            self.logger.debug(message)

    def complete(self, reason: Optional[str] = None) -> None:
        """
        Log the summary of the loop.

        Args:
            reason (Optional[str]): Why the loop stopped
        """
        elapsed = time.perf_counter() - self.start_time
        message = f"Completed {self.name}: {self.iterations} iterations in {elapsed:.2f} s"
        if self.history:
            message += f", best {self.quantity} {self.best_value:.3e} at iteration {self.best_iteration}"
        if reason:
            message += f", stop reason {reason}"

        self.logger.info(message)
