#!/usr/bin/env python3
"""
Ridge Module

This module provides ridge extraction from a synchrosqueezed energy
distribution, grouping of ridges into harmonic families and estimation of a
mode's fundamental instantaneous phase and amplitude from its ridge.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.ndimage import uniform_filter1d

from src.core import InstProfile, TimeGrid
from src.exceptions import RidgeError
from src.transform import TfDistribution, WpCoefficients, inst_freq_info, invert_on_support
from src.utils.config import RidgeConfig, WavePacketConfig
from src.utils.logging import get_logger

logger = get_logger(__name__)

ENERGY_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class RidgeCurve:
    """A frequency curve b -> freq(b) with the energy collected along it."""
    times: np.ndarray
    freqs: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        if not (self.times.shape == self.freqs.shape == self.energy.shape):
            raise RidgeError("Ridge times, frequencies and energies must have equal lengths")
        if np.any(self.freqs <= 0):
            raise RidgeError("Ridge frequencies must be positive")

    @property
    def mean_freq(self) -> float:
        return float(np.mean(self.freqs))

    @property
    def mean_energy(self) -> float:
        return float(np.mean(self.energy))


@dataclass
class RidgeGroup:
    """Ridges sharing one fundamental instantaneous frequency."""
    fundamental: RidgeCurve
    members: List[Tuple[int, int]] = field(default_factory=list)  # (ridge index, harmonic)


def _track(score: np.ndarray, penalty: float, max_jump: int) -> np.ndarray:
    """
    Maximize sum_j score[path_j, j] - penalty * (path_j - path_{j-1})^2.

    Jumps between consecutive columns are limited to max_jump bins.
    """
    nbins, ntime = score.shape
    max_jump = min(max_jump, nbins - 1)
    shifts = np.arange(-max_jump, max_jump + 1)
    jump_cost = penalty * shifts.astype(float) ** 2

    accumulated = score[:, 0].copy()
    backpointer = np.zeros((nbins, ntime), dtype=np.int64)
    rows = np.arange(nbins)

    for j in range(1, ntime):
        candidates = np.full((shifts.size, nbins), -np.inf)
        for s, shift in enumerate(shifts):
            # candidate for bin m coming from bin m - shift
            if shift >= 0:
                candidates[s, shift:] = accumulated[:nbins - shift] - jump_cost[s]
            else:
                candidates[s, :shift] = accumulated[-shift:] - jump_cost[s]
        best = np.argmax(candidates, axis=0)
        accumulated = candidates[best, rows] + score[:, j]
        backpointer[:, j] = rows - shifts[best]

    path = np.zeros(ntime, dtype=np.int64)
    path[-1] = int(np.argmax(accumulated))
    for j in range(ntime - 1, 0, -1):
        path[j - 1] = backpointer[path[j], j]
    return path


def _refine(energy: np.ndarray, freqs: np.ndarray, path: np.ndarray, halfwidth: int) -> np.ndarray:
    """Energy-weighted centroid frequency within +-halfwidth bins of the path."""
    nbins, ntime = energy.shape
    offsets = np.arange(-halfwidth, halfwidth + 1)
    rows = np.clip(path[None, :] + offsets[:, None], 0, nbins - 1)
    cols = np.broadcast_to(np.arange(ntime), rows.shape)
    local = energy[rows, cols]
    total = local.sum(axis=0)
    centroid = freqs[path].astype(float)
    has_energy = total > 0
    centroid[has_energy] = (local * freqs[rows]).sum(axis=0)[has_energy] / total[has_energy]
    return centroid


def extract_ridges(
    tf: TfDistribution,
    max_ridges: int,
    smoothness_penalty: Optional[float] = None,
    band_halfwidth: int = 3,
    stop_ratio: float = 0.01,
    max_jump: int = 8,
) -> List[RidgeCurve]:
    """
    Extract ridges one at a time by dynamic programming.

    Each pass maximizes the sum of log-energies along a path minus
    smoothness_penalty times the squared bin jumps, then zeroes a band of
    +-band_halfwidth bins around the path. Extraction stops after max_ridges
    ridges or when a ridge's mean energy falls below stop_ratio times the
    first ridge's.

    Args:
        tf (TfDistribution): Synchrosqueezed energy
        max_ridges (int): Maximum number of ridges
        smoothness_penalty (Optional[float]): Jump penalty, default 0.05 * number of bins
        band_halfwidth (int): Half-width in bins of the removed band
        stop_ratio (float): Relative mean-energy stopping threshold
        max_jump (int): Largest bin jump between consecutive times

    Returns:
        List[RidgeCurve]: Ridges in extraction order (decreasing energy)

    Raises:
        RidgeError: If max_ridges < 1
    """
    if max_ridges < 1:
        raise RidgeError(f"max_ridges must be >= 1, got {max_ridges}")

    energy = np.array(tf.energy, dtype=float)
    nbins = energy.shape[0]
    penalty = 0.05 * nbins if smoothness_penalty is None else float(smoothness_penalty)
    ntime = energy.shape[1]

    ridges: List[RidgeCurve] = []
    first_energy = None
    columns = np.arange(ntime)

    while len(ridges) < max_ridges:
        peak = energy.max() if energy.size else 0.0
        if peak <= 0:
            break

        score = np.log(energy / peak + ENERGY_FLOOR)
        path = _track(score, penalty, max_jump)
        path_energy = energy[path, columns]
        mean_energy = float(np.mean(path_energy))

        if first_energy is None:
            first_energy = mean_energy
        elif mean_energy < stop_ratio * first_energy:
            logger.debug(f"Stopping after {len(ridges)} ridges: mean energy {mean_energy:.3g} below threshold")
            break

        freqs = _refine(energy, tf.freqs, path, band_halfwidth)
        if np.any(freqs <= 0):
            logger.debug("Stopping at a ridge touching zero frequency")
            break
        ridges.append(RidgeCurve(tf.times.copy(), freqs, path_energy))
        logger.debug(f"Ridge {len(ridges)}: mean frequency {np.mean(freqs):.2f}, mean energy {mean_energy:.3g}")

        for offset in range(-band_halfwidth, band_halfwidth + 1):
            rows = np.clip(path + offset, 0, nbins - 1)
            energy[rows, columns] = 0.0

    return ridges


def _harmonic_of(ridge: RidgeCurve, seed: RidgeCurve) -> Tuple[float, int, float]:
    ratio = float(np.mean(ridge.freqs / seed.freqs))
    n = int(round(ratio))
    return ratio, n, abs(ratio - n)


def classify_fundamentals(ridges: List[RidgeCurve], k: int, tol: float = 0.05) -> List[RidgeGroup]:
    """
    Group ridges into k harmonic families.

    Ridges are visited in order of increasing mean frequency; a ridge whose
    frequency ratio to an existing seed is within tol of an integer n >= 2 is
    a harmonic, otherwise it seeds a new family while fewer than k exist.
    Every ridge is then assigned to the family giving the smallest harmonic
    number (ties broken by the deviation from an integer). Ridges matching no
    family join the nearest one.

    Args:
        ridges (List[RidgeCurve]): Extracted ridges
        k (int): Number of families
        tol (float): Allowed deviation of a frequency ratio from an integer

    Returns:
        List[RidgeGroup]: Families ordered by fundamental frequency

    Raises:
        RidgeError: If fewer than k families can be seeded
    """
    if k < 1:
        raise RidgeError(f"k must be >= 1, got {k}")
    if not ridges:
        raise RidgeError("No ridges to classify")

    order = sorted(range(len(ridges)), key=lambda i: ridges[i].mean_freq)
    seeds: List[int] = []
    for i in order:
        if len(seeds) == k:
            break
        is_harmonic = any(
            n >= 2 and deviation <= tol
            for _, n, deviation in (_harmonic_of(ridges[i], ridges[s]) for s in seeds)
        )
        if not is_harmonic:
            seeds.append(i)

    if len(seeds) < k:
        raise RidgeError(
            f"Cannot seed {k} fundamental groups from {len(ridges)} ridges "
            f"(mean frequencies: {', '.join(f'{r.mean_freq:.2f}' for r in ridges)})"
        )

    groups = [RidgeGroup(fundamental=ridges[s], members=[(s, 1)]) for s in seeds]
    for i in order:
        if i in seeds:
            continue
        candidates = []
        for g, s in enumerate(seeds):
            ratio, n, deviation = _harmonic_of(ridges[i], ridges[s])
            candidates.append((n if n >= 1 and deviation <= tol else np.inf, deviation, g, max(n, 1)))
        n_best, _, g_best, harmonic = min(candidates)
        if not np.isfinite(n_best):
            logger.warning(
                f"Ridge at {ridges[i].mean_freq:.2f} matches no harmonic family; "
                f"assigning it to the family at {groups[g_best].fundamental.mean_freq:.2f}"
            )
        groups[g_best].members.append((i, harmonic))

    return groups


def profile_from_fundamental(
    curve: RidgeCurve,
    tf_mask_source: WpCoefficients,
    cfg: WavePacketConfig,
    grid: TimeGrid,
    bin_width: float = 1.0,
    band_halfwidth: int = 3,
    amp_smooth: Optional[int] = None,
) -> InstProfile:
    """
    Estimate a mode's instantaneous phase and amplitude from its fundamental ridge.

    The phase is the cumulative integral of the ridge frequency, so it equals
    the true phase up to an additive constant. The amplitude is the magnitude
    of the component reconstructed from coefficients whose frequency estimate
    lies within band_halfwidth bins of the ridge, smoothed over amp_smooth
    samples (default: one period of the fundamental); it is known up to a
    constant factor.

    Args:
        curve (RidgeCurve): Fundamental frequency curve
        tf_mask_source (WpCoefficients): Transform the ridge was extracted from
        cfg (WavePacketConfig): Transform configuration
        grid (TimeGrid): Grid on which the profile is sampled
        bin_width (float): Frequency bin width of the distribution
        band_halfwidth (int): Half-width of the reconstruction band in bins
        amp_smooth (Optional[int]): Moving-average window in samples

    Returns:
        InstProfile: Phase and amplitude on grid

    Raises:
        RidgeError: If the curve does not belong to the transform or no energy lies near it
    """
    wp = tf_mask_source
    if curve.times.size < 2 or curve.times.shape != wp.times.shape or not np.allclose(curve.times, wp.times):
        raise RidgeError(
            f"Ridge sampled at {curve.times.size} times does not match the transform's {wp.times.size} times"
        )
    if len(grid) < 2:
        raise RidgeError("Profile grid needs at least 2 points")

    t = grid.points
    freq = np.interp(t, curve.times, curve.freqs, period=1.0)
    phase = cumulative_trapezoid(freq, t, initial=0.0)

    v = inst_freq_info(wp, cfg)
    near = np.abs(v - curve.freqs[None, :]) <= band_halfwidth * bin_width
    component = invert_on_support(wp, near, cfg)
    magnitude = np.abs(component.values)
    if not np.any(magnitude > 0):
        raise RidgeError(f"No transform energy near the ridge at {curve.mean_freq:.2f}")

    if not grid.same_as(wp.grid):
        magnitude = np.interp(t, wp.grid.points, magnitude, period=1.0)

    if amp_smooth is None:
        amp_smooth = max(1, int(round(len(grid) / curve.mean_freq)))
    amplitude = uniform_filter1d(magnitude, size=amp_smooth, mode="wrap")
    amplitude = np.maximum(amplitude, max(1e-6 * amplitude.max(), 1e-7))

    return InstProfile(phase, amplitude, fundamental_freq_hint=curve.mean_freq)


def ridge_table(ridges: List[RidgeCurve], groups: List[RidgeGroup]) -> dict:
    """
    Flatten classified ridges into columns b, freq, energy, group, harmonic.

    Groups are numbered from 1.
    """
    labels = {}
    for g, group in enumerate(groups, start=1):
        for index, harmonic in group.members:
            labels[index] = (g, harmonic)

    columns = {"b": [], "freq": [], "energy": [], "group": [], "harmonic": []}
    for index, ridge in enumerate(ridges):
        g, harmonic = labels.get(index, (0, 0))
        columns["b"].append(ridge.times)
        columns["freq"].append(ridge.freqs)
        columns["energy"].append(ridge.energy)
        columns["group"].append(np.full(ridge.times.size, g))
        columns["harmonic"].append(np.full(ridge.times.size, harmonic))
    return {name: np.concatenate(parts) if parts else np.array([]) for name, parts in columns.items()}


def ridge_config_kwargs(cfg: RidgeConfig) -> dict:
    """Keyword arguments of extract_ridges taken from a RidgeConfig."""
    return {
        "max_ridges": cfg.max_ridges,
        "smoothness_penalty": cfg.penalty,
        "band_halfwidth": cfg.band_halfwidth,
        "stop_ratio": cfg.stop_ratio,
        "max_jump": cfg.max_jump,
    }
