#!/usr/bin/env python3
"""
Paths and File System Utilities Module

This module provides the output-directory layout of the toolkit and atomic
JSON helpers.
"""

import json
import math
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from src.exceptions import DataFormatError
from .logging import get_logger

logger = get_logger(__name__)


class OutputManager:
    """Names and creates the files written by one CLI command."""

    def __init__(self, out_dir: Union[str, Path]):
        """
        Initialize the output manager.

        Args:
            out_dir (Union[str, Path]): Output directory, created if missing
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []
        logger.debug(f"Ensured output directory exists: {self.out_dir}")

    def path(self, filename: str) -> Path:
        """Get path for an arbitrary output file and record it as written."""
        path = self.out_dir / filename
        self.written.append(path)
        return path

    def signal_path(self) -> Path:
        return self.path("signal.csv")

    def mode_path(self, k: int) -> Path:
        return self.path(f"mode_{k}.csv")

    def shape_path(self, k: int) -> Path:
        return self.path(f"shape_{k}.csv")

    def profile_path(self, k: int) -> Path:
        return self.path(f"profile_{k}.csv")

    def folded_path(self, k: int) -> Path:
        return self.path(f"folded_{k}.csv")

    def residual_path(self) -> Path:
        return self.path("residual.csv")

    def tf_path(self) -> Path:
        return self.path("tf.csv")

    def tf_binary_path(self) -> Path:
        return self.path("tf.bin")

    def ridges_path(self) -> Path:
        return self.path("ridges.csv")

    def meta_path(self) -> Path:
        return self.path("meta.json")

    def report_path(self) -> Path:
        return self.path("report.json")

    def bench_path(self) -> Path:
        return self.path("bench.json")


def to_json_safe(data: Any) -> Any:
    """
    Convert numpy values, paths and non-finite floats into JSON-safe values.

    Non-finite floats become the strings "inf", "-inf" and "nan".

    Args:
        data (Any): Nested structure of dicts, lists, scalars and arrays

    Returns:
        Any: Structure accepted by json.dump with allow_nan=False
    """
    if isinstance(data, dict):
        return {str(key): to_json_safe(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_json_safe(value) for value in data]
    if isinstance(data, np.ndarray):
        return [to_json_safe(value) for value in data.tolist()]
    if isinstance(data, Path):
        return str(data)
    if isinstance(data, (bool, np.bool_)):
        return bool(data)
    if isinstance(data, (int, np.integer)):
        return int(data)
    if isinstance(data, (float, np.floating)):
        value = float(data)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return data


def load_json_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load a JSON file.

    Args:
        path (Union[str, Path]): Path to JSON file

    Returns:
        Dict[str, Any]: Loaded JSON data

    Raises:
        DataFormatError: If the file is missing or not valid JSON
    """
    path = Path(path)
    logger.debug(f"Loading JSON file: {path}")

    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise DataFormatError("file not found", path=path) from e
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e.msg}", path=path, line=e.lineno) from e


def save_json_file(data: Dict[str, Any], path: Union[str, Path]) -> None:
    """
    Save data to a JSON file atomically.

    Args:
        data (Dict[str, Any]): Data to save
        path (Union[str, Path]): Path to save to

    Raises:
        OSError: If the file cannot be written
    """
    path = Path(path)
    logger.debug(f"Saving JSON file: {path}")

    path.parent.mkdir(exist_ok=True, parents=True)

    # Use atomic write to prevent corruption
    with tempfile.NamedTemporaryFile(mode='w', encoding='utf-8', delete=False, dir=str(path.parent)) as temp:
        json.dump(to_json_safe(data), temp, ensure_ascii=False, indent=2, allow_nan=False)
        temp.write("\n")
        temp_path = temp.name

    shutil.move(temp_path, path)
