#!/usr/bin/env python3
"""
Core Data Model Module

This module provides the data types shared by every stage of the toolkit
(time grids, signals, instantaneous profiles, shape estimates and model
parameters) together with norms, periodic shape evaluation and the
shape-class checks.

All types are immutable: arrays are copied on construction and marked
read-only.
"""

from dataclasses import InitVar, dataclass
from math import gcd
from functools import reduce
from typing import Optional, Union

import numpy as np

from src.exceptions import ValidationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

UNIFORM_TOL = 1e-12
AMPLITUDE_FLOOR = 1e-8
SPECTRAL_TOL = 1e-6
DEFAULT_SHAPE_GRID = 1000


def _frozen_array(values, dtype=None) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Ordered sample times in [0, 1]."""
    points: np.ndarray
    uniform: bool = False
    step: Optional[float] = None

    def __post_init__(self):
        points = _frozen_array(self.points, dtype=float)
        if points.ndim != 1:
            raise ValidationError(f"Grid points must be one-dimensional, got shape {points.shape}")
        if points.size and not np.all(np.isfinite(points)):
            raise ValidationError("Grid points must be finite")
        if points.size and (points[0] < 0.0 or points[-1] > 1.0):
            raise ValidationError(
                f"Grid points must lie in [0, 1], got [{points[0]}, {points[-1]}]"
            )
        if points.size > 1 and np.any(np.diff(points) <= 0):
            raise ValidationError("Grid points must be strictly increasing")

        if self.uniform:
            L = points.size
            if L == 0:
                raise ValidationError("A uniform grid needs at least one point")
            if np.max(np.abs(points - np.arange(L) / L)) > UNIFORM_TOL:
                raise ValidationError("Uniform grid points must equal l/L within 1e-12")
            object.__setattr__(self, "step", 1.0 / L)
        else:
            object.__setattr__(self, "step", None)

        object.__setattr__(self, "points", points)

    @classmethod
    def uniform_grid(cls, L: int) -> "TimeGrid":
        """
        Build the uniform grid {l/L : l = 0..L-1}.

        Args:
            L (int): Number of points

        Returns:
            TimeGrid: Uniform grid
        """
        if L < 1:
            raise ValidationError(f"Uniform grid size must be >= 1, got {L}")
        return cls(np.arange(L) / L, uniform=True)

    @classmethod
    def from_points(cls, points) -> "TimeGrid":
        """
        Build a grid from sample times, detecting uniform spacing.

        Args:
            points: Strictly increasing sample times in [0, 1]

        Returns:
            TimeGrid: Grid flagged uniform iff points[l] = l/L within 1e-12
        """
        points = np.asarray(points, dtype=float)
        L = points.size
        uniform = L > 0 and points.ndim == 1 and bool(
            np.max(np.abs(points - np.arange(L) / L)) <= UNIFORM_TOL
        )
        return cls(points, uniform=uniform)

    def __len__(self) -> int:
        return int(self.points.size)

    def same_as(self, other: "TimeGrid") -> bool:
        """Whether two grids hold the same points."""
        return len(self) == len(other) and bool(np.array_equal(self.points, other.points))


@dataclass(frozen=True, eq=False)
class Signal:
    """Real or complex samples on a TimeGrid."""
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        values = _frozen_array(values)
        if values.ndim != 1 or values.size != len(self.grid):
            raise ValidationError(
                f"Signal has {values.size} values for a grid of {len(self.grid)} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("Signal values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.values))


@dataclass(frozen=True, eq=False)
class InstProfile:
    """
    Instantaneous phase p(t) = N*phi(t) (in cycles) and amplitude alpha(t) of one mode.

    Pass validate=False to hold raw, unchecked samples (e.g. read from a
    file); downstream operations then report violations themselves.
    """
    phase: np.ndarray
    amplitude: np.ndarray
    fundamental_freq_hint: Optional[float] = None
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool):
        phase = _frozen_array(self.phase, dtype=float)
        amplitude = _frozen_array(self.amplitude, dtype=float)
        if phase.ndim != 1 or phase.shape != amplitude.shape:
            raise ValidationError(
                f"Phase and amplitude must be 1-D of equal length, got {phase.shape} and {amplitude.shape}"
            )
        if not (np.all(np.isfinite(phase)) and np.all(np.isfinite(amplitude))):
            raise ValidationError("Profile samples must be finite")
        if validate:
            if phase.size > 1 and np.any(np.diff(phase) <= 0):
                raise ValidationError("Instantaneous phase must be strictly increasing")
            if amplitude.size and np.min(amplitude) <= AMPLITUDE_FLOOR:
                raise ValidationError(
                    f"Instantaneous amplitude must exceed {AMPLITUDE_FLOOR}, got min {np.min(amplitude)}"
                )
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "amplitude", amplitude)

    def __len__(self) -> int:
        return int(self.phase.size)


@dataclass(frozen=True, eq=False)
class ShapeEstimate:
    """One period of a shape function sampled at x_n = n/G, n = 0..G-1."""
    samples: np.ndarray

    def __post_init__(self):
        samples = _frozen_array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValidationError("Shape samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("Shape samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def grid_size(self) -> int:
        return int(self.samples.size)

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.grid_size) / self.grid_size

    @property
    def is_centered(self) -> bool:
        return abs(float(np.mean(self.samples))) <= 1e-10

    def norm(self) -> float:
        """L2 norm over one period (rectangle rule)."""
        return float(np.sqrt(np.mean(self.samples ** 2)))

    def fourier(self) -> np.ndarray:
        """Fourier coefficients s_hat(n), n in FFT order."""
        return np.fft.fft(self.samples) / self.grid_size

    @classmethod
    def zeros(cls, grid_size: int = DEFAULT_SHAPE_GRID) -> "ShapeEstimate":
        return cls(np.zeros(grid_size))


@dataclass(frozen=True)
class ModelParams:
    """Class bounds of the generalized mode model."""
    M: float = 1.0
    N: float = 1.0
    K: int = 1
    K0: int = 1
    C: float = 1.0
    d: float = 1.0

    def __post_init__(self):
        if self.M < 1:
            raise ValidationError(f"M must be >= 1, got {self.M}")
        if self.K < 1:
            raise ValidationError(f"K must be >= 1, got {self.K}")
        if self.K0 < 1:
            raise ValidationError(f"K0 must be >= 1, got {self.K0}")
        if not 0 < self.d <= 1:
            raise ValidationError(f"d must lie in (0, 1], got {self.d}")


@dataclass(frozen=True)
class ShapeClassReport:
    """Outcome of the discrete shape-class checks."""
    mean_coefficient: float
    coefficient_sum: float
    sup_norm: float
    active_gcd: int
    zero_mean: bool
    summable: bool
    bounded: bool
    primitive: bool

    @property
    def passed(self) -> bool:
        return self.zero_mean and self.summable and self.bounded and self.primitive


def norm_of_values(values: np.ndarray, grid: TimeGrid) -> float:
    """
    L2 norm over [0, 1] of samples on a grid.

    Uniform grids use the rectangle rule. Other grids use the trapezoid rule
    with constant extension of the first and last sample to 0 and 1.

    Args:
        values (np.ndarray): Samples, one per grid point
        grid (TimeGrid): Sample times

    Returns:
        float: sqrt of the integral of |values|^2

    Raises:
        ValidationError: If there are no samples
    """
    if len(grid) == 0:
        raise ValidationError("Cannot take the norm of an empty signal")

    power = np.abs(values) ** 2
    if grid.uniform:
        return float(np.sqrt(np.mean(power)))

    t = grid.points
    integral = power[0] * t[0] + power[-1] * (1.0 - t[-1])
    if t.size > 1:
        integral += np.trapezoid(power, t) if hasattr(np, "trapezoid") else np.trapz(power, t)
    return float(np.sqrt(integral))


def l2_norm(sig: Signal) -> float:
    """
    L2 norm of a signal over [0, 1].

    Args:
        sig (Signal): Signal

    Returns:
        float: Norm

    Raises:
        ValidationError: If the signal is empty
    """
    return norm_of_values(sig.values, sig.grid)


def shape_mean_remove(s: ShapeEstimate) -> ShapeEstimate:
    """Subtract the period mean from a shape."""
    return ShapeEstimate(s.samples - np.mean(s.samples))


def eval_shape(s: ShapeEstimate, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate a 1-periodic shape by linear interpolation with wrap-around.

    Args:
        s (ShapeEstimate): Shape samples on n/G
        x (Union[float, np.ndarray]): Evaluation points (any real)

    Returns:
        Union[float, np.ndarray]: Shape values, scalar for scalar input
    """
    G = s.grid_size
    position = np.mod(np.asarray(x, dtype=float), 1.0) * G
    left = np.floor(position)
    weight = position - left
    i0 = left.astype(np.int64) % G
    i1 = (i0 + 1) % G
    values = (1.0 - weight) * s.samples[i0] + weight * s.samples[i1]
    if np.ndim(x) == 0:
        return float(values)
    return values


def validate_shape_class(s: ShapeEstimate, params: ModelParams, tol: float = 1e-10) -> ShapeClassReport:
    """
    Check the discrete shape-class conditions; never raises.

    The conditions are: |s_hat(0)| < tol, sum |s_hat(n)| <= M, sup |s| <= M and
    gcd of the active harmonics (|s_hat(n)| > 1e-6 max |s_hat|) equal to 1.

    Args:
        s (ShapeEstimate): Shape to check
        params (ModelParams): Provides the class bound M
        tol (float): Tolerance on the mean coefficient

    Returns:
        ShapeClassReport: Individual outcomes and the measured quantities
    """
    coeffs = s.fourier()
    magnitudes = np.abs(coeffs)
    mean_coefficient = float(magnitudes[0])
    coefficient_sum = float(np.sum(magnitudes[1:]))
    sup_norm = float(np.max(np.abs(s.samples)))

    positive = magnitudes[1:s.grid_size // 2 + 1]
    peak = float(np.max(magnitudes))
    active = np.nonzero(positive > SPECTRAL_TOL * peak)[0] + 1 if peak > 0 else np.array([], dtype=int)
    active_gcd = reduce(gcd, (int(n) for n in active), 0)

    report = ShapeClassReport(
        mean_coefficient=mean_coefficient,
        coefficient_sum=coefficient_sum,
        sup_norm=sup_norm,
        active_gcd=active_gcd,
        zero_mean=mean_coefficient < tol,
        summable=coefficient_sum <= params.M,
        bounded=sup_norm <= params.M,
        primitive=active_gcd == 1,
    )
    if not report.passed:
        logger.debug(f"Shape outside class S_M (M={params.M}): {report}")
    return report


def resample_uniform(sig: Signal, L: int) -> Signal:
    """
    Resample a signal onto the uniform grid of size L.

    Periodic linear interpolation is used, so the last sample connects to
    the first across t = 1.

    Args:
        sig (Signal): Signal on any grid
        L (int): Target grid size

    Returns:
        Signal: Signal on TimeGrid.uniform_grid(L)
    """
    target = TimeGrid.uniform_grid(L)
    t = sig.grid.points
    if sig.is_complex:
        values = (np.interp(target.points, t, sig.values.real, period=1.0)
                  + 1j * np.interp(target.points, t, sig.values.imag, period=1.0))
    else:
        values = np.interp(target.points, t, sig.values, period=1.0)
    return Signal(target, values)
