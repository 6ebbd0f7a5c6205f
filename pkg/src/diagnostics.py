#!/usr/bin/env python3
"""
Diagnostics Module

This module provides the quantities used to judge a decomposition:
well-differentiation counts of the folded phases, convergence-rate sequences
of the residual norms, the SNR of a noisy signal, folding-uniformity
histograms and shape errors.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core import InstProfile, ShapeEstimate, Signal, TimeGrid, eval_shape, l2_norm
from src.exceptions import ValidationError
from src.regress import fold_positions
from src.utils.logging import get_logger

logger = get_logger(__name__)

UNDERFLOW = 1e-15


@dataclass
class WellDiffReport:
    """Joint and marginal bin counts of the folded phases and the derived constants."""
    gamma: float
    beta: float
    contraction: float
    d_joint: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    d_marginal: Dict[int, np.ndarray] = field(default_factory=dict)
    beta_pairs: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "beta": self.beta,
            "contraction": self.contraction,
            "beta_pairs": {f"{i + 1},{j + 1}": value for (i, j), value in self.beta_pairs.items()},
        }


@dataclass
class FoldHistogram:
    """Histogram of folded phase positions and its chi-square statistic against uniform."""
    counts: np.ndarray
    edges: np.ndarray
    chi2: float


def _bin_indices(profile: InstProfile, nbins: int) -> np.ndarray:
    return np.minimum((fold_positions(profile.phase) * nbins).astype(np.int64), nbins - 1)


def well_differentiation(
    profiles: List[InstProfile], grid: TimeGrid, nbins: int, M: float = 1.0
) -> WellDiffReport:
    """
    Count folded phase positions per bin and pair of bins.

    D_i(m) counts samples with frac(p_i) in bin m; D_ij(m, n) counts samples
    with frac(p_i) in bin m and frac(p_j) in bin n. gamma is the smallest
    joint count, beta_ij = sqrt(sum_m (1/D_i(m)) sum_n (D_ij(m, n) - gamma)^2),
    beta is the largest beta_ij and the contraction is M^2 (K - 1) beta.

    Args:
        profiles (List[InstProfile]): Profiles on grid
        grid (TimeGrid): Sample times
        nbins (int): Number of bins per axis
        M (float): Shape class bound

    Returns:
        WellDiffReport: Counts and constants; gamma is inf and beta 0 for one mode

    Raises:
        ValidationError: If nbins < 2 or a profile does not match the grid
    """
    if nbins < 2:
        raise ValidationError(f"nbins must be >= 2, got {nbins}")
    L = len(grid)
    for k, profile in enumerate(profiles, start=1):
        if len(profile) != L:
            raise ValidationError(f"Profile {k} has {len(profile)} samples for a grid of {L} points")
    if nbins * nbins > L:
        logger.warning(f"nbins^2 = {nbins * nbins} exceeds L = {L}; joint bins will likely be empty")

    indices = [_bin_indices(p, nbins) for p in profiles]
    d_marginal = {i: np.bincount(idx, minlength=nbins) for i, idx in enumerate(indices)}

    K = len(profiles)
    if K < 2:
        return WellDiffReport(gamma=math.inf, beta=0.0, contraction=0.0, d_marginal=d_marginal)

    d_joint = {}
    for i in range(K):
        for j in range(K):
            if i != j:
                joint = np.bincount(indices[i] * nbins + indices[j], minlength=nbins * nbins)
                d_joint[(i, j)] = joint.reshape(nbins, nbins)

    gamma = int(min(int(d.min()) for d in d_joint.values()))

    beta_pairs = {}
    for (i, j), joint in d_joint.items():
        spread = np.sum((joint - gamma).astype(float) ** 2, axis=1)
        marginal = d_marginal[i].astype(float)
        populated = marginal > 0
        beta_pairs[(i, j)] = float(np.sqrt(np.sum(spread[populated] / marginal[populated])))

    beta = max(beta_pairs.values())
    return WellDiffReport(
        gamma=gamma,
        beta=beta,
        contraction=M ** 2 * (K - 1) * beta,
        d_joint=d_joint,
        d_marginal=d_marginal,
        beta_pairs=beta_pairs,
    )


def convergence_rates(residual_norms: List[float]) -> Tuple[List[float], List[float]]:
    """
    Convergence-rate sequences of the residual norms.

    mu_j = log|eps_{j-1} - eps_j| for j >= 1 and eta_j = mu_j - mu_{j+1}.
    Differences below 1e-15 are reported as nan, as is any eta touching one.

    Args:
        residual_norms (List[float]): At least three norms

    Returns:
        Tuple[List[float], List[float]]: mu (length n-1) and eta (length n-2)

    Raises:
        ValidationError: If fewer than three norms are given
    """
    norms = np.asarray(residual_norms, dtype=float)
    if norms.size < 3:
        raise ValidationError(f"Convergence rates need at least 3 residual norms, got {norms.size}")

    differences = np.abs(np.diff(norms))
    mu = np.full(differences.size, np.nan)
    resolved = differences >= UNDERFLOW
    mu[resolved] = np.log(differences[resolved])
    eta = mu[:-1] - mu[1:]
    return mu.tolist(), eta.tolist()


def snr_db(modes: List[Signal], sigma2: float) -> float:
    """
    SNR in dB: the minimum over modes of 10 log10(||f_i|| / sigma2).

    Raises:
        ValidationError: If sigma2 <= 0 or no modes are given
    """
    if sigma2 <= 0:
        raise ValidationError(f"Noise variance must be positive, got {sigma2}")
    if not modes:
        raise ValidationError("At least one mode is required")
    norms = [l2_norm(mode) for mode in modes]
    with np.errstate(divide="ignore"):
        return float(min(10.0 * np.log10(norm / sigma2) for norm in norms))


def fold_uniformity(profile: InstProfile, grid: TimeGrid, nbins: int) -> FoldHistogram:
    """
    Histogram of frac(p(t_l)) over nbins uniform bins with its chi-square statistic.

    Args:
        profile (InstProfile): Profile on grid
        grid (TimeGrid): Sample times
        nbins (int): Number of bins

    Returns:
        FoldHistogram: Counts, bin edges and chi2 against L/nbins per bin
    """
    if nbins < 2:
        raise ValidationError(f"nbins must be >= 2, got {nbins}")
    if len(profile) != len(grid):
        raise ValidationError(f"Profile has {len(profile)} samples for a grid of {len(grid)} points")
    counts = np.bincount(_bin_indices(profile, nbins), minlength=nbins)
    expected = len(grid) / nbins
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return FoldHistogram(counts=counts, edges=np.linspace(0.0, 1.0, nbins + 1), chi2=chi2)


def shape_error(est: ShapeEstimate, truth: ShapeEstimate, align: bool = True, scale: bool = True) -> float:
    """
    Relative L2 error of a shape estimate.

    With align, the estimate is first circularly shifted to best match the
    truth (a phase known up to a constant shifts the shape); with scale, it
    is multiplied by the least-squares factor (an amplitude known up to a
    constant scales it).

    Args:
        est (ShapeEstimate): Estimated shape
        truth (ShapeEstimate): Reference shape, resampled to the estimate's grid if needed
        align (bool): Allow a circular shift
        scale (bool): Allow a positive scale factor

    Returns:
        float: ||c * shift(est) - truth|| / ||truth|| (absolute error if truth is zero)
    """
    values = np.asarray(est.samples, dtype=float)
    G = values.size
    reference = truth.samples if truth.grid_size == G else eval_shape(truth, np.arange(G) / G)

    if align:
        correlation = np.real(np.fft.ifft(np.fft.fft(values) * np.conj(np.fft.fft(reference))))
        values = np.roll(values, -int(np.argmax(correlation)))

    if scale:
        energy = float(np.dot(values, values))
        if energy > 0:
            values = values * max(float(np.dot(values, reference)) / energy, 0.0)

    error = float(np.sqrt(np.mean((values - reference) ** 2)))
    reference_norm = float(np.sqrt(np.mean(reference ** 2)))
    return error / reference_norm if reference_norm > 0 else error


def decomposition_diagnostics(
    profiles: List[InstProfile],
    grid: TimeGrid,
    residual_norms: List[float],
    nbins: int,
    M: float = 1.0,
) -> dict:
    """
    Diagnostics embedded in a decomposition report.

    Returns:
        dict: gamma, beta, contraction, chi2 per mode and the mu/eta sequences
    """
    well_diff = well_differentiation(profiles, grid, nbins, M)
    summary = well_diff.to_dict()
    summary["chi2"] = [fold_uniformity(p, grid, nbins).chi2 for p in profiles]
    mu: Optional[List[float]] = None
    eta: Optional[List[float]] = None
    if len(residual_norms) >= 3:
        mu, eta = convergence_rates(residual_norms)
    summary["mu"] = mu
    summary["eta"] = eta
    return summary
