"""
Utilities Package

This package provides configuration, logging and output-file helpers for the
shape decomposition toolkit. CSV tables live in src.utils.tables, which
depends on the core types and is imported directly.
"""

from .config import get_config, load_config, reload_config, RunConfig
from .logging import get_logger, log_execution, handle_exceptions, IterationLogger, configure_logging
from .paths import OutputManager, load_json_file, save_json_file, to_json_safe

__all__ = [
    # From config
    'get_config',
    'load_config',
    'reload_config',
    'RunConfig',

    # From logging
    'get_logger',
    'log_execution',
    'handle_exceptions',
    'IterationLogger',
    'configure_logging',

    # From paths
    'OutputManager',
    'load_json_file',
    'save_json_file',
    'to_json_safe',
]
