#!/usr/bin/env python3
"""
Wave Packet Transform Module

This module provides the one-dimensional wave packet transform W_f(a, b),
its time derivative, the instantaneous frequency information v_f(a, b), the
synchrosqueezed energy distribution T_f(v, b) and the inverse transform
restricted to a mask of coefficients.

The transform is computed in the Fourier domain on a uniform grid. Signals
are treated as 1-periodic; only non-negative frequencies are analysed.
Coefficients are sampled in time on the decimated grid b_j = j/nb, where nb
is the smallest power of two resolving the highest analysed frequency.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import quad

from src.core import Signal, TimeGrid
from src.exceptions import TransformError
from src.utils.config import WavePacketConfig
from src.utils.logging import get_logger, log_execution

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class WpCoefficients:
    """Wave packet coefficients W[i, j] = W_f(a_i, b_j) and their time derivative."""
    scales: np.ndarray
    times: np.ndarray
    coeffs: np.ndarray
    dcoeffs: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        shape = (self.scales.size, self.times.size)
        if self.coeffs.shape != shape or self.dcoeffs.shape != shape:
            raise TransformError(
                f"Coefficient matrices must have shape {shape}, got {self.coeffs.shape} and {self.dcoeffs.shape}"
            )
        if self.scales.size > 1 and np.any(np.diff(self.scales) <= 0):
            raise TransformError("Scales must be increasing")
        for array in (self.scales, self.times, self.coeffs, self.dcoeffs):
            array.setflags(write=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.coeffs.shape


@dataclass(frozen=True, eq=False)
class TfDistribution:
    """Synchrosqueezed energy T[m, j] over frequency bins v_m and times b_j."""
    freqs: np.ndarray
    times: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        if self.energy.shape != (self.freqs.size, self.times.size):
            raise TransformError(
                f"Energy matrix must have shape {(self.freqs.size, self.times.size)}, got {self.energy.shape}"
            )
        if np.any(self.energy < 0):
            raise TransformError("Synchrosqueezed energy must be non-negative")
        for array in (self.freqs, self.times, self.energy):
            array.setflags(write=False)

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def total_energy(self) -> float:
        return float(np.sum(self.energy))


def _bump(u: np.ndarray) -> np.ndarray:
    """exp(1/(u^2 - 1)) on (-1, 1), zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 / (u[inside] ** 2 - 1.0))
    return out


@lru_cache(maxsize=None)
def _bump_normalization(d: float) -> float:
    energy, _ = quad(lambda xi: float(_bump(np.array(xi / d)) ** 2), -d, d, limit=200)
    return 1.0 / np.sqrt(energy)


def mother_wavepacket_hat(xi: Union[float, np.ndarray], cfg: WavePacketConfig) -> Union[float, np.ndarray]:
    """
    Fourier transform of the mother wave packet.

    A smooth non-negative bump supported on (-d, d), d = cfg.rad, scaled to
    unit L2 norm.

    Args:
        xi (Union[float, np.ndarray]): Frequency argument(s)
        cfg (WavePacketConfig): Provides the support radius

    Returns:
        Union[float, np.ndarray]: w_hat(xi), scalar for scalar input
    """
    d = float(cfg.rad)
    values = _bump_normalization(d) * _bump(np.asarray(xi, dtype=float) / d)
    if np.ndim(xi) == 0:
        return float(values)
    return values


def scale_ladder(cfg: WavePacketConfig) -> np.ndarray:
    """
    Scales a_i from freq_min to freq_max with a_{i+1} = a_i + rad * a_i^s / red.

    Adjacent wave packets overlap with redundancy red.

    Args:
        cfg (WavePacketConfig): Transform configuration

    Returns:
        np.ndarray: Increasing scales
    """
    scales = []
    a = float(cfg.freq_min)
    while a <= cfg.freq_max:
        scales.append(a)
        a += cfg.rad * a ** cfg.s_geom / cfg.red
    return np.array(scales)


def time_samples(L: int, a_max: float, cfg: WavePacketConfig) -> int:
    """Number nb of decimated time samples: a power of two above twice the top frequency, at most L."""
    needed = 2.0 * (a_max + cfg.rad * a_max ** cfg.s_geom)
    nb = 1 << int(np.ceil(np.log2(max(needed, 2.0))))
    return min(nb, L)


def _window(a: float, L: int, cfg: WavePacketConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Non-negative integer frequencies in the support of the packet at scale a, and its values there."""
    radius = cfg.rad * a ** cfg.s_geom
    lo = max(0, int(np.ceil(a - radius)))
    hi = min((L - 1) // 2, int(np.floor(a + radius)))
    if hi < lo:
        return np.array([], dtype=int), np.array([])
    ks = np.arange(lo, hi + 1)
    return ks, mother_wavepacket_hat(a ** (-cfg.s_geom) * (ks - a), cfg)


def _transform_scale(a: float, spectrum: np.ndarray, nb: int, cfg: WavePacketConfig) -> Tuple[np.ndarray, np.ndarray]:
    L = spectrum.size
    ks, win = _window(a, L, cfg)
    placed = np.zeros(nb, dtype=complex)
    placed[ks] = win * spectrum[ks]
    factor = a ** (-cfg.s_geom / 2.0) * nb / L
    row = factor * np.fft.ifft(placed)
    drow = factor * np.fft.ifft(2j * np.pi * np.arange(nb) * placed)
    return row, drow


@log_execution
def forward_wp(sig: Signal, cfg: WavePacketConfig) -> WpCoefficients:
    """
    Compute the wave packet transform and its time derivative.

    Args:
        sig (Signal): Signal on a uniform grid
        cfg (WavePacketConfig): Transform configuration

    Returns:
        WpCoefficients: Coefficients on scales x decimated times

    Raises:
        TransformError: If the grid is not uniform or no scale is analysed
    """
    if not sig.grid.uniform:
        raise TransformError("The wave packet transform needs a uniform grid; resample the signal first")

    scales = scale_ladder(cfg)
    if scales.size == 0:
        raise TransformError(f"Empty scale list for frequency range {cfg.freq_range}")

    L = len(sig)
    spectrum = np.fft.fft(sig.values)
    nb = time_samples(L, scales[-1], cfg)
    logger.debug(f"Transforming {L} samples over {scales.size} scales onto {nb} time samples")

    coeffs = np.zeros((scales.size, nb), dtype=complex)
    dcoeffs = np.zeros((scales.size, nb), dtype=complex)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            future_to_index = {
                executor.submit(_transform_scale, a, spectrum, nb, cfg): i
                for i, a in enumerate(scales)
            }
            for future in as_completed(future_to_index):
                i = future_to_index[future]
                coeffs[i], dcoeffs[i] = future.result()
    else:
        for i, a in enumerate(scales):
            coeffs[i], dcoeffs[i] = _transform_scale(a, spectrum, nb, cfg)

    return WpCoefficients(scales, np.arange(nb) / nb, coeffs, dcoeffs, sig.grid)


def significant(wp: WpCoefficients, cfg: WavePacketConfig) -> np.ndarray:
    """Mask of coefficients with |W(a, b)| >= a^(-s/2) * sqrt(eps_sst)."""
    threshold = wp.scales[:, None] ** (-cfg.s_geom / 2.0) * np.sqrt(cfg.eps_sst)
    magnitude = np.abs(wp.coeffs)
    return (magnitude >= threshold) & (magnitude > 0)


def inst_freq_info(wp: WpCoefficients, cfg: WavePacketConfig) -> np.ndarray:
    """
    Instantaneous frequency information v_f(a, b) = Re(dW / (2 pi i W)).

    Args:
        wp (WpCoefficients): Transform output
        cfg (WavePacketConfig): Provides eps_sst and s_geom

    Returns:
        np.ndarray: Frequencies, np.inf where the coefficient is below threshold
    """
    keep = significant(wp, cfg)
    v = np.full(wp.shape, np.inf)
    v[keep] = np.real(wp.dcoeffs[keep] / (2j * np.pi * wp.coeffs[keep]))
    return v


def default_tf_bins(cfg: WavePacketConfig) -> int:
    """One frequency bin per unit frequency on [0, freq_max]."""
    return int(round(cfg.freq_max)) + 1


def synchrosqueeze(wp: WpCoefficients, cfg: WavePacketConfig, nbins: Optional[int] = None) -> TfDistribution:
    """
    Reassign coefficient energy to the bins of the estimated frequency.

    Bin centers are v_m = m * freq_max / (nbins - 1). Each significant
    coefficient adds |W|^2 * da (the local scale step) to the bin nearest its
    v_f; estimates outside [0, freq_max] are dropped.

    Args:
        wp (WpCoefficients): Transform output
        cfg (WavePacketConfig): Transform configuration
        nbins (Optional[int]): Number of frequency bins, default one per unit frequency

    Returns:
        TfDistribution: Non-negative energy over (frequency bin, time)

    Raises:
        TransformError: If nbins < 2
    """
    if nbins is None:
        nbins = default_tf_bins(cfg)
    if nbins < 2:
        raise TransformError(f"Synchrosqueezing needs at least 2 frequency bins, got {nbins}")

    freqs = np.linspace(0.0, cfg.freq_max, nbins)
    width = freqs[1] - freqs[0]
    v = inst_freq_info(wp, cfg)

    da = np.gradient(wp.scales) if wp.scales.size > 1 else np.ones(1)
    weights = np.abs(wp.coeffs) ** 2 * da[:, None]

    finite = np.isfinite(v)
    m = np.full(v.shape, -1, dtype=np.int64)
    m[finite] = np.rint(v[finite] / width).astype(np.int64)
    valid = finite & (m >= 0) & (m < nbins)

    ntime = wp.times.size
    columns = np.broadcast_to(np.arange(ntime), v.shape)
    flat = m[valid] * ntime + columns[valid]
    energy = np.bincount(flat, weights=weights[valid], minlength=nbins * ntime).reshape(nbins, ntime)

    dropped = int(np.count_nonzero(finite & ~valid))
    if dropped:
        logger.debug(f"Dropped {dropped} coefficients with frequency estimates outside [0, {cfg.freq_max}]")

    return TfDistribution(freqs, wp.times.copy(), energy)


def invert_on_support(wp: WpCoefficients, mask: np.ndarray, cfg: WavePacketConfig) -> Signal:
    """
    Reconstruct the component carried by the masked coefficients.

    Uses the canonical dual frame of the wave packet family: for every
    frequency k, the masked coefficients are recombined with the packet
    windows and divided by the frame diagonal sum_i a_i^(-s) w_hat_i(k)^2.

    Args:
        wp (WpCoefficients): Transform output
        mask (np.ndarray): Boolean matrix of the coefficient shape
        cfg (WavePacketConfig): Transform configuration

    Returns:
        Signal: Complex component on the original grid

    Raises:
        TransformError: If the mask shape does not match the coefficients
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != wp.shape:
        raise TransformError(f"Mask shape {mask.shape} does not match coefficients {wp.shape}")

    L = len(wp.grid)
    if not mask.any():
        logger.warning("Empty coefficient mask; returning a zero component")
        return Signal(wp.grid, np.zeros(L, dtype=complex))

    nb = wp.times.size
    spectrum = np.zeros(L, dtype=complex)
    diagonal = np.zeros(L)
    for i, a in enumerate(wp.scales):
        ks, win = _window(a, L, cfg)
        if ks.size == 0:
            continue
        weight = a ** (-cfg.s_geom / 2.0)
        diagonal[ks] += weight ** 2 * win ** 2
        if mask[i].any():
            masked = np.fft.fft(np.where(mask[i], wp.coeffs[i], 0.0))
            spectrum[ks] += weight * win * masked[ks]

    covered = diagonal > 1e-12 * diagonal.max()
    spectrum[covered] *= L / nb / diagonal[covered]
    spectrum[~covered] = 0.0
    return Signal(wp.grid, np.fft.ifft(spectrum))
