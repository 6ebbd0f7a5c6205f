#!/usr/bin/env python3
"""
Regression Module

This module provides the diffeomorphism step of the decomposition: warping a
residual by a mode's instantaneous phase, folding the warped samples onto one
period and estimating the period's shape by partition-based regression or by
least-squares spline regression with knot removal.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.interpolate import make_lsq_spline

from src.core import AMPLITUDE_FLOOR, InstProfile, ShapeEstimate, Signal, shape_mean_remove
from src.exceptions import RegressionError
from src.utils.config import RegressionConfig
from src.utils.logging import get_logger

logger = get_logger(__name__)

KNOT_DENSITY_FLOOR = 0.1


@dataclass(frozen=True, eq=False)
class FoldedSamples:
    """Regression samples (x, y) on one period with the times they came from."""
    xs: np.ndarray
    ys: np.ndarray
    source_times: np.ndarray

    def __post_init__(self):
        if not (self.xs.shape == self.ys.shape == self.source_times.shape):
            raise RegressionError("Folded xs, ys and source times must have equal lengths")
        if self.xs.size and (self.xs.min() < 0.0 or self.xs.max() >= 1.0):
            raise RegressionError("Folded positions must lie in [0, 1)")

    def __len__(self) -> int:
        return int(self.xs.size)


def fold_positions(phase: np.ndarray) -> np.ndarray:
    """Fractional parts of the phase, in [0, 1)."""
    xs = np.mod(np.asarray(phase, dtype=float), 1.0)
    # mod can round up to exactly 1.0 for tiny negative inputs
    xs[xs >= 1.0] = 0.0
    return xs


def check_amplitude(profile: InstProfile, times: np.ndarray) -> None:
    """
    Raise if the amplitude falls below the floor anywhere.

    Raises:
        RegressionError: Naming the first offending time
    """
    low = profile.amplitude < AMPLITUDE_FLOOR
    if np.any(low):
        first = int(np.argmax(low))
        raise RegressionError(
            f"Instantaneous amplitude {profile.amplitude[first]:.3g} below {AMPLITUDE_FLOOR} at t={times[first]:.6g}"
        )


def warp_and_fold(residual: Signal, profile: InstProfile) -> FoldedSamples:
    """
    Warp a residual by the profile and fold it onto one period.

    Sample l becomes x = frac(p(t_l)), y = r(t_l) / alpha(t_l).

    Args:
        residual (Signal): Real residual
        profile (InstProfile): Profile sampled on the residual's grid

    Returns:
        FoldedSamples: Regression samples

    Raises:
        RegressionError: On length mismatch, complex input or vanishing amplitude
    """
    if len(profile) != len(residual):
        raise RegressionError(
            f"Profile has {len(profile)} samples but the residual has {len(residual)}"
        )
    if residual.is_complex:
        raise RegressionError("Regression needs a real-valued residual")
    times = residual.grid.points
    check_amplitude(profile, times)
    return FoldedSamples(
        fold_positions(profile.phase),
        residual.values / profile.amplitude,
        times.copy(),
    )


def partition_bin_means(fs: FoldedSamples, nbins: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean of y over each of nbins uniform bins of [0, 1).

    Returns:
        Tuple[np.ndarray, np.ndarray]: Bin means (nan for empty bins) and counts
    """
    index = np.minimum((fs.xs * nbins).astype(np.int64), nbins - 1)
    counts = np.bincount(index, minlength=nbins)
    sums = np.bincount(index, weights=fs.ys, minlength=nbins)
    means = np.full(nbins, np.nan)
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled]
    return means, counts


def partition_regress(fs: FoldedSamples, cfg: RegressionConfig) -> ShapeEstimate:
    """
    Partition-based regression estimate of the shape.

    The bin count is nbins, or max(50, sqrt(L)) capped at grid_size when
    nbins is unset. Bin means are placed at the bin centers, empty bins are filled by
    periodic linear interpolation, and the result is interpolated onto the
    shape grid and mean-removed.

    Args:
        fs (FoldedSamples): Regression samples
        cfg (RegressionConfig): Provides nbins and grid_size

    Returns:
        ShapeEstimate: Zero-mean shape

    Raises:
        RegressionError: If there are no samples
    """
    if len(fs) == 0:
        raise RegressionError("All partition bins are empty")

    nbins = cfg.partition_bins(len(fs))
    means, counts = partition_bin_means(fs, nbins)
    centers = (np.arange(nbins) + 0.5) / nbins
    empty = counts == 0
    if np.any(empty):
        logger.debug(f"Filling {int(empty.sum())} empty bins of {nbins} by interpolation")
        means[empty] = np.interp(centers[empty], centers[~empty], means[~empty], period=1.0)

    x = np.arange(cfg.grid_size) / cfg.grid_size
    return shape_mean_remove(ShapeEstimate(np.interp(x, centers, means, period=1.0)))


def curvature_knots(fs: FoldedSamples, cfg: RegressionConfig) -> np.ndarray:
    """
    Place nk knots on [0, 1] at quantiles of the samples' curvature.

    A pilot partition estimate on max(4 * nk, nbins) bins gives periodic
    second differences; the knot density is their square root mixed with a
    uniform floor, so sharp features collect knots and flat stretches keep a
    few. Knots closer than half a pilot bin are merged.

    Args:
        fs (FoldedSamples): Regression samples
        cfg (RegressionConfig): Provides nk and the partition bin count

    Returns:
        np.ndarray: Increasing knot positions, starting at 0 and ending near 1
    """
    nbins = max(4 * cfg.nk, cfg.partition_bins(len(fs)))
    means, counts = partition_bin_means(fs, nbins)
    centers = (np.arange(nbins) + 0.5) / nbins
    empty = counts == 0
    if np.all(empty):
        return np.linspace(0.0, 1.0, cfg.nk)
    if np.any(empty):
        means[empty] = np.interp(centers[empty], centers[~empty], means[~empty], period=1.0)

    curvature = np.sqrt(np.abs(np.roll(means, -1) - 2.0 * means + np.roll(means, 1)))
    total = float(curvature.sum())
    if total <= 0.0:
        return np.linspace(0.0, 1.0, cfg.nk)
    density = (1.0 - KNOT_DENSITY_FLOOR) * curvature / total + KNOT_DENSITY_FLOOR / nbins
    cdf = np.r_[0.0, np.cumsum(density)]
    cdf /= cdf[-1]
    edges = np.arange(nbins + 1) / nbins
    return _merge_close(np.interp(np.linspace(0.0, 1.0, cfg.nk), cdf, edges), 0.5 / nbins)


def _merge_close(knots: np.ndarray, min_gap: float) -> np.ndarray:
    kept = [float(knots[0])]
    for knot in knots[1:]:
        if knot - kept[-1] >= min_gap:
            kept.append(float(knot))
    return np.asarray(kept)


def _lsq_fit(x: np.ndarray, y: np.ndarray, interior: List[float], degree: int, lo: float, hi: float):
    knots = np.r_[[lo] * (degree + 1), interior, [hi] * (degree + 1)]
    spline = make_lsq_spline(x, y, knots, k=degree)
    rms = float(np.sqrt(np.mean((spline(x) - y) ** 2)))
    return spline, rms


def _periodic_interior(base: List[float], lo: float, hi: float, min_gap: float) -> List[float]:
    knots = np.unique(np.r_[np.asarray(base) - 1.0, base, np.asarray(base) + 1.0])
    inside = knots[(knots > lo) & (knots < hi)]
    if inside.size == 0:
        return []
    return [float(k) for k in _merge_close(inside, min_gap)]


def spline_regress(fs: FoldedSamples, cfg: RegressionConfig) -> ShapeEstimate:
    """
    Least-squares spline regression estimate of the shape.

    The samples are extended periodically by a margin of wrap_margin on both
    sides. Knots are placed by curvature_knots and repeated periodically into
    the margins; a spline of degree ord is fitted, then one pass over the
    knots removes each knot whose removal keeps the RMS residual within a
    factor krf of the full fit's.

    Args:
        fs (FoldedSamples): Regression samples
        cfg (RegressionConfig): Provides nk, krf, ord, wrap_margin and grid_size

    Returns:
        ShapeEstimate: Zero-mean shape

    Raises:
        RegressionError: If there are too few samples or the fit is singular
    """
    required = cfg.nk * (cfg.ord + 1)
    if len(fs) < required:
        raise RegressionError(
            f"Spline regression needs at least {required} samples (nk * (ord + 1)), got {len(fs)}"
        )

    margin = cfg.wrap_margin
    head = fs.xs < margin
    tail = fs.xs >= 1.0 - margin
    x = np.r_[fs.xs[tail] - 1.0, fs.xs, fs.xs[head] + 1.0]
    y = np.r_[fs.ys[tail], fs.ys, fs.ys[head]]
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]

    lo, hi = -margin, 1.0 + margin
    placed = curvature_knots(fs, cfg)
    base = [float(k) for k in placed if k < 1.0]
    min_gap = 0.5 / max(4 * cfg.nk, cfg.partition_bins(len(fs)))
    interior = _periodic_interior(base, lo, hi, min_gap)
    scale = float(np.sqrt(np.mean(y ** 2)))

    try:
        spline, full_rms = _lsq_fit(x, y, interior, cfg.ord, lo, hi)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise RegressionError(f"Spline fit with {len(interior)} knots failed: {str(e)}") from e

    kept = list(base)
    i = 0
    while i < len(kept):
        trial = kept[:i] + kept[i + 1:]
        try:
            candidate, rms = _lsq_fit(x, y, _periodic_interior(trial, lo, hi, min_gap), cfg.ord, lo, hi)
        except (ValueError, np.linalg.LinAlgError):
            i += 1
            continue
        if rms <= cfg.krf * full_rms + 1e-12 * scale:
            kept, spline = trial, candidate
        else:
            i += 1

    logger.debug(f"Spline regression kept {len(kept)} of {len(base)} knots")
    grid = np.arange(cfg.grid_size) / cfg.grid_size
    return shape_mean_remove(ShapeEstimate(spline(grid)))


def regress(fs: FoldedSamples, cfg: RegressionConfig) -> ShapeEstimate:
    """Solve the one-period regression problem with the configured method."""
    if cfg.method == "spline":
        return spline_regress(fs, cfg)
    return partition_regress(fs, cfg)
