#!/usr/bin/env python3
"""
Synthetic Signals Module

This module provides the library of shape functions, parametric amplitude
and phase descriptors, the preset scenarios and the seeded generators for
signals, sample grids and regression-only data.

The ECG and piecewise shapes are synthetic: the ECG shapes are three
periodic Gaussian bumps standing for the P, R and T peaks.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple, Union

import numpy as np

from src.core import DEFAULT_SHAPE_GRID, InstProfile, ShapeEstimate, Signal, TimeGrid, eval_shape, l2_norm
from src.exceptions import ValidationError
from src.regress import FoldedSamples
from src.utils.logging import get_logger

logger = get_logger(__name__)

TRIG = {"sin": np.sin, "cos": np.cos}

# (heights, centers, widths) of the P, R and T bumps
ECG_BUMPS = {
    "ecg1": ((0.2, 1.0, 0.3), (0.2, 0.5, 0.8), (0.03, 0.01, 0.05)),
    "ecg2": ((0.25, 0.8, 0.4), (0.25, 0.45, 0.75), (0.04, 0.015, 0.06)),
}


def _ecg(name: str, x: np.ndarray) -> np.ndarray:
    heights, centers, widths = ECG_BUMPS[name]
    values = np.zeros_like(x)
    for height, center, width in zip(heights, centers, widths):
        for wrap in (-1.0, 0.0, 1.0):
            values += height * np.exp(-0.5 * ((x - center + wrap) / width) ** 2)
    return values


SHAPE_BUILDERS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cosine": lambda x: np.cos(2 * np.pi * x),
    "pwc1": lambda x: np.where((x >= 0.3) & (x < 0.7), 1.0, -1.0),
    "pwc2": lambda x: np.where((x >= 0.15) & (x < 0.6), 1.0, 0.0),
    "pwl_triangle": lambda x: 1.0 - 4.0 * np.abs(x - 0.5),
    "pwl_saw": lambda x: np.interp(x, [0.0, 0.3, 1.0], [-1.0, 1.0, -1.0]),
    "ecg1": lambda x: _ecg("ecg1", x),
    "ecg2": lambda x: _ecg("ecg2", x),
}

BUILTIN_SHAPES = tuple(SHAPE_BUILDERS)


def builtin_shape(name: str, grid_size: int = DEFAULT_SHAPE_GRID) -> ShapeEstimate:
    """
    One period of a library shape, mean-removed and scaled to unit L2 norm.

    Args:
        name (str): One of BUILTIN_SHAPES
        grid_size (int): Number of samples per period

    Returns:
        ShapeEstimate: The shape

    Raises:
        ValidationError: If the name is unknown
    """
    if name not in SHAPE_BUILDERS:
        raise ValidationError(f"Unknown shape '{name}', expected one of {', '.join(BUILTIN_SHAPES)}")
    x = np.arange(grid_size) / grid_size
    values = SHAPE_BUILDERS[name](x)
    values = values - np.mean(values)
    return ShapeEstimate(values / np.sqrt(np.mean(values ** 2)))


@dataclass(frozen=True)
class PhaseSpec:
    """Phase p(t) = N (t + t0 + c trig(2 pi (t + t0))), in cycles."""
    N: float
    c: float = 0.0
    trig: str = "sin"
    t0: float = 0.0

    def __post_init__(self):
        if self.N <= 0:
            raise ValidationError(f"N must be positive, got {self.N}")
        if abs(self.c) >= 1.0 / (2.0 * np.pi):
            raise ValidationError(f"|c| must be below 1/(2 pi) to keep the phase increasing, got {self.c}")
        if self.trig not in TRIG:
            raise ValidationError(f"trig must be 'sin' or 'cos', got '{self.trig}'")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        shifted = t + self.t0
        return self.N * (shifted + self.c * TRIG[self.trig](2 * np.pi * shifted))


@dataclass(frozen=True)
class AmplitudeSpec:
    """Amplitude alpha(t) = 1 + a trig(2 pi b t)."""
    a: float = 0.0
    b: float = 1.0
    trig: str = "sin"

    def __post_init__(self):
        if abs(self.a) >= 1.0:
            raise ValidationError(f"|a| must be below 1 to keep the amplitude positive, got {self.a}")
        if self.trig not in TRIG:
            raise ValidationError(f"trig must be 'sin' or 'cos', got '{self.trig}'")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return 1.0 + self.a * TRIG[self.trig](2 * np.pi * self.b * t)


@dataclass(frozen=True)
class ModeSpec:
    """A generalized mode alpha(t) s(p(t))."""
    shape: Union[str, ShapeEstimate]
    amp: AmplitudeSpec
    phase: PhaseSpec

    def resolved_shape(self) -> ShapeEstimate:
        return builtin_shape(self.shape) if isinstance(self.shape, str) else self.shape


def _ex1(shapes: Tuple[str, str]) -> List[ModeSpec]:
    return [
        ModeSpec(shapes[0], AmplitudeSpec(0.05, 2.0, "sin"), PhaseSpec(60.0, 0.01, "sin")),
        ModeSpec(shapes[1], AmplitudeSpec(0.1, 1.0, "sin"), PhaseSpec(90.0, 0.01, "cos")),
    ]


def _ex2(N: float) -> List[ModeSpec]:
    return [
        ModeSpec("pwl_triangle", AmplitudeSpec(0.05, 2.0, "sin"), PhaseSpec(N, 0.006, "sin")),
        ModeSpec("pwl_saw", AmplitudeSpec(0.05, 1.0, "cos"), PhaseSpec(N, 0.006, "cos")),
    ]


def _ex3() -> List[ModeSpec]:
    shapes = ("ecg1", "ecg2", "pwl_triangle", "pwl_saw")
    return [
        ModeSpec(shape, AmplitudeSpec(), PhaseSpec(200.0, 0.01, "sin", t0=0.05 * k))
        for k, shape in enumerate(shapes)
    ]


PRESETS: Dict[str, Callable[[float], List[ModeSpec]]] = {
    "ex1": lambda N: _ex1(("pwl_triangle", "pwl_saw")),
    "ex2": _ex2,
    "ex3": lambda N: _ex3(),
    "ecg_pair": lambda N: _ex1(("ecg1", "ecg2")),
    "pwc_pair": lambda N: _ex1(("pwc1", "pwc2")),
    "cosine": lambda N: [ModeSpec("cosine", AmplitudeSpec(), PhaseSpec(60.0, 0.01, "sin"))],
}


def preset_specs(name: str, N: float = 100.0) -> List[ModeSpec]:
    """
    Mode specifications of a preset scenario.

    Args:
        name (str): One of PRESETS
        N (float): Fundamental frequency, used by ex2 only

    Returns:
        List[ModeSpec]: One spec per mode

    Raises:
        ValidationError: If the preset is unknown
    """
    if name not in PRESETS:
        raise ValidationError(f"Unknown preset '{name}', expected one of {', '.join(PRESETS)}")
    return PRESETS[name](N)


def sample_grid(kind: str, L: int, seed: int = 0) -> TimeGrid:
    """
    Sample times on [0, 1): the uniform grid l/L or L sorted i.i.d. uniform draws.

    Raises:
        ValidationError: If L < 2 or the kind is unknown
    """
    if L < 2:
        raise ValidationError(f"Grid size must be >= 2, got {L}")
    if kind == "uniform":
        return TimeGrid.uniform_grid(L)
    if kind == "iid_uniform":
        rng = np.random.default_rng(seed)
        return TimeGrid(np.sort(rng.random(L)), uniform=False)
    raise ValidationError(f"Unknown grid kind '{kind}', expected 'uniform' or 'iid_uniform'")


def generate(
    specs: List[ModeSpec], grid: TimeGrid, noise_sigma2: float = 0.0, seed: int = 0
) -> Tuple[Signal, List[Signal], List[InstProfile]]:
    """
    Generate a noisy sum of generalized modes with its exact profiles.

    Args:
        specs (List[ModeSpec]): Mode specifications
        grid (TimeGrid): Sample times
        noise_sigma2 (float): Variance of the i.i.d. Gaussian noise
        seed (int): Noise seed

    Returns:
        Tuple[Signal, List[Signal], List[InstProfile]]: Noisy sum, clean modes, profiles
    """
    if not specs:
        raise ValidationError("At least one mode specification is required")
    if noise_sigma2 < 0:
        raise ValidationError(f"Noise variance must be >= 0, got {noise_sigma2}")

    t = grid.points
    modes, profiles = [], []
    total = np.zeros(len(grid))
    for spec in specs:
        phase = spec.phase(t)
        amplitude = spec.amp(t)
        values = amplitude * eval_shape(spec.resolved_shape(), phase)
        modes.append(Signal(grid, values))
        profiles.append(InstProfile(phase, amplitude, fundamental_freq_hint=spec.phase.N))
        total = total + values

    if noise_sigma2 > 0:
        rng = np.random.default_rng(seed)
        total = total + rng.normal(0.0, np.sqrt(noise_sigma2), len(grid))

    logger.debug(f"Generated {len(specs)} modes on {len(grid)} samples (noise variance {noise_sigma2})")
    return Signal(grid, total), modes, profiles


def sigma2_for_snr(modes: List[Signal], snr_db: float) -> float:
    """Noise variance giving the requested SNR: min ||f_i|| * 10^(-snr/10)."""
    if not modes:
        raise ValidationError("At least one mode is required")
    return float(min(l2_norm(mode) for mode in modes) * 10.0 ** (-snr_db / 10.0))


def regression_toy(
    shape: ShapeEstimate, L: int, noise_halfwidth: float = 0.5, seed: int = 0
) -> FoldedSamples:
    """
    Regression-only samples: X ~ U[0, 1), Y = s(X) + U[-w, w].

    Args:
        shape (ShapeEstimate): Target shape
        L (int): Number of samples
        noise_halfwidth (float): Half-width w of the uniform noise
        seed (int): Seed

    Returns:
        FoldedSamples: Samples; source_times holds X
    """
    rng = np.random.default_rng(seed)
    xs = rng.random(L)
    ys = eval_shape(shape, xs) + rng.uniform(-noise_halfwidth, noise_halfwidth, L)
    return FoldedSamples(xs, ys, xs.copy())
