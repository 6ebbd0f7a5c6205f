#!/usr/bin/env python3
"""
Tables Module

This module provides reading and writing of the toolkit's CSV tables and the
dense binary time-frequency dump.

All CSV floats are written with 17 significant digits so that values
round-trip exactly.
"""

import re
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np
import pandas as pd

from src.core import InstProfile, ShapeEstimate, Signal, TimeGrid
from src.exceptions import DataFormatError, ValidationError
from .logging import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
TF_BINARY_VERSION = 1


def _write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def _read_frame(path: Union[str, Path], columns: Sequence[str]) -> pd.DataFrame:
    """
    Read a CSV table and check that the given columns are present and numeric.

    Line numbers in errors are 1-based file lines (the header is line 1).
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError("file not found", path=path)

    try:
        frame = pd.read_csv(path, skipinitialspace=True, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("file is empty", path=path, line=1) from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise DataFormatError(
            f"malformed row: {str(e)}", path=path, line=int(match.group(1)) if match else None
        ) from e

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataFormatError(
            f"missing columns {', '.join(missing)} (found {', '.join(frame.columns)})", path=path, line=1
        )
    if frame.empty:
        raise DataFormatError("no data rows", path=path, line=2)

    for column in columns:
        numeric = pd.to_numeric(frame[column], errors="coerce")
        bad = numeric.isna().to_numpy()
        if bad.any():
            row = int(np.argmax(bad))
            raise DataFormatError(
                f"non-numeric value {frame[column].iloc[row]!r} in column '{column}'",
                path=path, line=row + 2,
            )
        frame[column] = numeric.astype(float)

    return frame


def read_signal_csv(path: Union[str, Path]) -> Signal:
    """
    Read a signal table with columns t,value or t,re,im.

    Args:
        path (Union[str, Path]): CSV file

    Returns:
        Signal: Signal on the grid given by column t

    Raises:
        DataFormatError: If the table is malformed or the grid is invalid
    """
    path = Path(path)
    header = _read_frame(path, ["t"])
    columns = ["t", "re", "im"] if {"re", "im"} <= set(header.columns) else ["t", "value"]
    frame = _read_frame(path, columns)

    try:
        grid = TimeGrid.from_points(frame["t"].to_numpy())
        if columns[1] == "re":
            values = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
        else:
            values = frame["value"].to_numpy()
        sig = Signal(grid, values)
    except ValidationError as e:
        raise DataFormatError(str(e), path=path) from e

    logger.debug(f"Read signal of {len(sig)} samples from {path} (uniform={grid.uniform})")
    return sig


def write_signal_csv(sig: Signal, path: Union[str, Path]) -> None:
    """Write a signal as t,value (real) or t,re,im (complex)."""
    if sig.is_complex:
        frame = pd.DataFrame({"t": sig.grid.points, "re": sig.values.real, "im": sig.values.imag})
    else:
        frame = pd.DataFrame({"t": sig.grid.points, "value": sig.values})
    _write_frame(frame, path)


def read_shape_csv(path: Union[str, Path]) -> ShapeEstimate:
    """Read a shape table x,value."""
    frame = _read_frame(path, ["x", "value"])
    return ShapeEstimate(frame["value"].to_numpy())


def write_shape_csv(shape: ShapeEstimate, path: Union[str, Path]) -> None:
    """Write a shape table x,value."""
    _write_frame(pd.DataFrame({"x": shape.grid, "value": shape.samples}), path)


def read_profile_csv(path: Union[str, Path], grid: TimeGrid = None) -> InstProfile:
    """
    Read a profile table t,phase,amplitude.

    Args:
        path (Union[str, Path]): CSV file
        grid (TimeGrid): If given, the t column must match its points

    Returns:
        InstProfile: Unvalidated profile (checked later by the consumer)

    Raises:
        DataFormatError: If the table is malformed or does not match the grid
    """
    path = Path(path)
    frame = _read_frame(path, ["t", "phase", "amplitude"])
    if grid is not None:
        t = frame["t"].to_numpy()
        if t.size != len(grid) or not np.allclose(t, grid.points, rtol=0.0, atol=1e-12):
            raise DataFormatError(
                f"profile grid ({t.size} points) does not match the signal grid ({len(grid)} points)",
                path=path,
            )
    return InstProfile(frame["phase"].to_numpy(), frame["amplitude"].to_numpy(), validate=False)


def write_profile_csv(profile: InstProfile, grid: TimeGrid, path: Union[str, Path]) -> None:
    """Write a profile table t,phase,amplitude."""
    _write_frame(
        pd.DataFrame({"t": grid.points, "phase": profile.phase, "amplitude": profile.amplitude}),
        path,
    )


def write_folded_csv(times: np.ndarray, xs: np.ndarray, ys: np.ndarray, path: Union[str, Path]) -> None:
    """Write folded regression samples t,x,y."""
    _write_frame(pd.DataFrame({"t": times, "x": xs, "y": ys}), path)


def write_tf_csv(freqs: np.ndarray, times: np.ndarray, energy: np.ndarray, path: Union[str, Path]) -> int:
    """
    Write the sparse time-frequency table b,v,energy (positive entries only).

    Returns:
        int: Number of rows written
    """
    m, j = np.nonzero(energy > 0)
    order = np.lexsort((m, j))
    m, j = m[order], j[order]
    _write_frame(pd.DataFrame({"b": times[j], "v": freqs[m], "energy": energy[m, j]}), path)
    return int(m.size)


def write_tf_binary(energy: np.ndarray, path: Union[str, Path]) -> None:
    """
    Write a dense energy matrix: int64 header (nfreq, ntime, version) then
    row-major float64 values, little-endian.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nfreq, ntime = energy.shape
    header = np.array([nfreq, ntime, TF_BINARY_VERSION], dtype="<i8")
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(energy, dtype="<f8").tobytes())
    logger.debug(f"Wrote {nfreq}x{ntime} energy matrix to {path}")


def read_tf_binary(path: Union[str, Path]) -> np.ndarray:
    """
    Read a dense energy matrix written by write_tf_binary.

    Raises:
        DataFormatError: If the header or payload size is inconsistent
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 24:
        raise DataFormatError("truncated header", path=path)
    nfreq, ntime, version = np.frombuffer(raw[:24], dtype="<i8")
    if version != TF_BINARY_VERSION:
        raise DataFormatError(f"unsupported version {version}", path=path)
    payload = np.frombuffer(raw[24:], dtype="<f8")
    if payload.size != nfreq * ntime:
        raise DataFormatError(
            f"expected {nfreq * ntime} values, found {payload.size}", path=path
        )
    return payload.reshape(int(nfreq), int(ntime)).copy()


def write_ridges_csv(columns: Dict[str, np.ndarray], path: Union[str, Path]) -> None:
    """Write the ridge table b,freq,energy,group,harmonic."""
    frame = pd.DataFrame(columns, columns=["b", "freq", "energy", "group", "harmonic"])
    _write_frame(frame, path)
