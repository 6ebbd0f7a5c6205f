#!/usr/bin/env python3
"""
Pipeline Module

This module runs the toolkit's stages end to end and writes their outputs:

1. synth     - generate a preset scenario (signal, modes, exact profiles)
2. sswpt     - transform, extract and classify ridges, estimate profiles
3. decompose - recover shapes by recursive regression (optionally after sswpt)
4. bench     - sweep experiments over N, L and noise

Every JSON file written here embeds the fully-resolved configuration.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from tqdm import tqdm

from src.core import InstProfile, Signal, TimeGrid, resample_uniform
from src.diagnostics import (
    convergence_rates,
    decomposition_diagnostics,
    fold_uniformity,
    shape_error,
    snr_db,
)
from src.exceptions import RidgeError, ValidationError
from src.rdbr import Decomposition, rdbr_decompose
from src.regress import regress, warp_and_fold
from src.ridge import (
    RidgeCurve,
    RidgeGroup,
    classify_fundamentals,
    extract_ridges,
    profile_from_fundamental,
    ridge_config_kwargs,
    ridge_table,
)
from src.synth import (
    builtin_shape,
    generate,
    preset_specs,
    regression_toy,
    sample_grid,
    sigma2_for_snr,
)
from src.transform import TfDistribution, WpCoefficients, default_tf_bins, forward_wp, synchrosqueeze
from src.utils.config import RunConfig
from src.utils.logging import get_logger, handle_exceptions, log_execution
from src.utils.paths import OutputManager, save_json_file
from src.utils.tables import (
    write_folded_csv,
    write_profile_csv,
    write_ridges_csv,
    write_shape_csv,
    write_signal_csv,
    write_tf_binary,
    write_tf_csv,
)

logger = get_logger(__name__)

BENCH_SUITES = ("rate_vs_N", "err_vs_L", "noise", "reg_vs_L", "fold_hist")
RATE_VS_N = (2.0, 10.0, 50.0, 100.0, 200.0)
ERR_VS_L = tuple(2 ** m for m in range(7, 13))
FOLD_HIST_L = (2 ** 12, 2 ** 14, 2 ** 16)
DEFAULT_BENCH_SNR = -3.0


@dataclass
class SynthResult:
    signal: Signal
    modes: List[Signal]
    profiles: List[InstProfile]
    sigma2: float
    snr: float


@dataclass
class SswptResult:
    wp: WpCoefficients
    tf: TfDistribution
    ridges: List[RidgeCurve]
    groups: List[RidgeGroup]
    profiles: List[InstProfile]


def synthesize(cfg: RunConfig) -> SynthResult:
    """
    Generate the configured preset on the configured grid.

    The noise variance is cfg.sigma2, or derived from cfg.snr when that is set.
    """
    specs = preset_specs(cfg.preset, cfg.N)
    grid = sample_grid(cfg.grid, cfg.L, cfg.seed)

    sigma2 = cfg.sigma2
    if cfg.snr is not None:
        _, clean_modes, _ = generate(specs, grid, 0.0, cfg.seed)
        sigma2 = sigma2_for_snr(clean_modes, cfg.snr)

    signal, modes, profiles = generate(specs, grid, sigma2, cfg.seed)
    snr = snr_db(modes, sigma2) if sigma2 > 0 else np.inf
    return SynthResult(signal, modes, profiles, sigma2, snr)


@handle_exceptions
def estimate_profiles(sig: Signal, cfg: RunConfig, k: Optional[int] = None) -> SswptResult:
    """
    Estimate k fundamental profiles of a signal with the synchrosqueezed transform.

    Non-uniform signals are resampled onto a uniform grid of the same size
    for the transform; the profiles are sampled on the signal's own grid.

    Raises:
        RidgeError: If no ridges are found or k families cannot be formed
    """
    k = cfg.k if k is None else k
    uniform_sig = sig if sig.grid.uniform else resample_uniform(sig, len(sig))

    wp = forward_wp(uniform_sig, cfg.wavepacket)
    nbins = cfg.ridge.nbins or default_tf_bins(cfg.wavepacket)
    tf = synchrosqueeze(wp, cfg.wavepacket, nbins)

    ridges = extract_ridges(tf, **ridge_config_kwargs(cfg.ridge))
    if not ridges:
        raise RidgeError("No ridges found in the synchrosqueezed distribution")
    logger.info(f"Extracted {len(ridges)} ridges")

    groups = classify_fundamentals(ridges, k, cfg.ridge.harmonic_tol)
    profiles = [
        profile_from_fundamental(
            group.fundamental, wp, cfg.wavepacket, sig.grid,
            bin_width=tf.bin_width,
            band_halfwidth=cfg.ridge.band_halfwidth,
            amp_smooth=cfg.ridge.amp_smooth,
        )
        for group in groups
    ]
    for index, profile in enumerate(profiles, start=1):
        logger.info(f"Fundamental {index}: mean frequency {profile.fundamental_freq_hint:.2f}")
    return SswptResult(wp, tf, ridges, groups, profiles)


def _write_profiles(profiles: List[InstProfile], grid: TimeGrid, outputs: OutputManager) -> None:
    for index, profile in enumerate(profiles, start=1):
        write_profile_csv(profile, grid, outputs.profile_path(index))


@log_execution
def run_synth(cfg: RunConfig, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write signal.csv, mode_k.csv, profile_k.csv and meta.json for a preset.

    Returns:
        List[Path]: Files written
    """
    outputs = OutputManager(out_dir)
    result = synthesize(cfg)

    write_signal_csv(result.signal, outputs.signal_path())
    for index, mode in enumerate(result.modes, start=1):
        write_signal_csv(mode, outputs.mode_path(index))
    _write_profiles(result.profiles, result.signal.grid, outputs)

    save_json_file({
        "preset": cfg.preset,
        "K": len(result.modes),
        "L": cfg.L,
        "sigma2": result.sigma2,
        "snr": result.snr,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
    }, outputs.meta_path())

    logger.info(f"Synthesized preset '{cfg.preset}' with {len(result.modes)} modes into {outputs.out_dir}")
    return outputs.written


def _write_sswpt(result: SswptResult, grid: TimeGrid, outputs: OutputManager) -> None:
    write_tf_csv(result.tf.freqs, result.tf.times, result.tf.energy, outputs.tf_path())
    write_tf_binary(result.tf.energy, outputs.tf_binary_path())
    write_ridges_csv(ridge_table(result.ridges, result.groups), outputs.ridges_path())
    _write_profiles(result.profiles, grid, outputs)


@log_execution
def run_sswpt(sig: Signal, cfg: RunConfig, out_dir: Union[str, Path], k: Optional[int] = None) -> SswptResult:
    """Write tf.csv, tf.bin, ridges.csv, profile_k.csv and meta.json for a signal."""
    outputs = OutputManager(out_dir)
    result = estimate_profiles(sig, cfg, k)
    _write_sswpt(result, sig.grid, outputs)
    save_json_file({
        "ridges": len(result.ridges),
        "fundamentals": [group.fundamental.mean_freq for group in result.groups],
        "config": cfg.to_dict(),
    }, outputs.meta_path())
    return result


@log_execution
def run_decompose(
    sig: Signal,
    cfg: RunConfig,
    out_dir: Union[str, Path],
    profiles: Optional[List[InstProfile]] = None,
    k: Optional[int] = None,
    dump_folded: bool = False,
) -> Decomposition:
    """
    Decompose a signal and write shape_k.csv, mode_k.csv, residual.csv and report.json.

    Without profiles, the synchrosqueezed transform estimates them first and
    its outputs are written alongside. With dump_folded, the input signal
    folded by each profile is written to folded_k.csv.
    """
    outputs = OutputManager(out_dir)
    if profiles is None:
        estimated = estimate_profiles(sig, cfg, k)
        _write_sswpt(estimated, sig.grid, outputs)
        profiles = estimated.profiles

    if dump_folded:
        for index, profile in enumerate(profiles, start=1):
            folded = warp_and_fold(sig, profile)
            write_folded_csv(folded.source_times, folded.xs, folded.ys, outputs.folded_path(index))

    decomposition = rdbr_decompose(sig, profiles, cfg.rdbr)

    for index, (shape, mode) in enumerate(zip(decomposition.shapes, decomposition.modes), start=1):
        write_shape_csv(shape, outputs.shape_path(index))
        write_signal_csv(mode, outputs.mode_path(index))
    write_signal_csv(decomposition.residual, outputs.residual_path())

    report = decomposition.report.to_dict()
    report["diagnostics"] = decomposition_diagnostics(
        profiles, sig.grid, decomposition.report.residual_norms, cfg.regression.histogram_bins, cfg.M
    )
    report["config"] = cfg.to_dict()
    save_json_file(report, outputs.report_path())
    return decomposition


def _rdbr_cell(cfg: RunConfig, **changes) -> dict:
    cell_cfg = replace(cfg, **changes)
    result = synthesize(cell_cfg)
    start = time.time()
    decomposition = rdbr_decompose(result.signal, result.profiles, cell_cfg.rdbr)
    wall_time = time.time() - start
    norms = decomposition.report.residual_norms
    eta = convergence_rates(norms)[1] if len(norms) >= 3 else []
    specs = preset_specs(cell_cfg.preset, cell_cfg.N)
    return {
        "residual_norms": norms,
        "final_residual": decomposition.report.final_residual_norm,
        "relative_residual": decomposition.report.final_residual_norm / decomposition.report.initial_norm,
        "eta": eta,
        "stop_reason": decomposition.report.stop_reason,
        "shape_errors": [
            shape_error(est, spec.resolved_shape()) for est, spec in zip(decomposition.shapes, specs)
        ],
        "snr": result.snr,
        "wall_time": wall_time,
    }


def _rate_vs_n(cfg: RunConfig, N: float) -> dict:
    return {"N": N, **_rdbr_cell(cfg, preset="ex2", N=N, sigma2=0.0, snr=None)}


def _err_vs_l(cfg: RunConfig, L: int) -> dict:
    return {"L": L, **_rdbr_cell(cfg, preset="ex2", L=L, sigma2=0.0, snr=None)}


def _noise(cfg: RunConfig, snr: Optional[float]) -> dict:
    preset = cfg.preset if cfg.preset in ("ecg_pair", "pwc_pair", "ex3") else "ecg_pair"
    return {"snr_target": snr, **_rdbr_cell(cfg, preset=preset, sigma2=0.0, snr=snr)}


def _reg_vs_l(cfg: RunConfig, L: int) -> dict:
    truth = builtin_shape("pwl_triangle", cfg.regression.grid_size)
    start = time.time()
    estimate = regress(regression_toy(truth, L, 0.5, cfg.seed), cfg.regression)
    return {
        "L": L,
        "regression_error": shape_error(estimate, truth, align=False, scale=False),
        "wall_time": time.time() - start,
    }


def _fold_hist(cfg: RunConfig, L: int) -> dict:
    start = time.time()
    grid = sample_grid("uniform", L)
    _, _, profiles = generate(preset_specs("ex1"), grid)
    nbins = cfg.regression.histogram_bins
    draws = np.sort(np.random.default_rng(cfg.seed).random(L))
    iid = InstProfile(draws, np.ones(L), validate=False)
    return {
        "L": L,
        "chi2_modes": [fold_uniformity(p, grid, nbins).chi2 for p in profiles],
        "chi2_iid": fold_uniformity(iid, grid, nbins).chi2,
        "wall_time": time.time() - start,
    }


def bench_cells(suite: str, cfg: RunConfig) -> List[Callable[[], dict]]:
    """
    The independent cells of a bench suite.

    Raises:
        ValidationError: If the suite is unknown
    """
    if suite == "rate_vs_N":
        return [lambda N=N: _rate_vs_n(cfg, N) for N in RATE_VS_N]
    if suite == "err_vs_L":
        return [lambda L=L: _err_vs_l(cfg, L) for L in ERR_VS_L]
    if suite == "noise":
        snr = cfg.snr if cfg.snr is not None else DEFAULT_BENCH_SNR
        return [lambda s=s: _noise(cfg, s) for s in (None, snr)]
    if suite == "reg_vs_L":
        return [lambda L=L: _reg_vs_l(cfg, L) for L in ERR_VS_L]
    if suite == "fold_hist":
        return [lambda L=L: _fold_hist(cfg, L) for L in FOLD_HIST_L]
    raise ValidationError(f"Unknown bench suite '{suite}', expected one of {', '.join(BENCH_SUITES)}")


@log_execution
def run_bench(suite: str, cfg: RunConfig, out_dir: Union[str, Path], workers: int = 1) -> Dict:
    """
    Run a bench suite and write bench.json.

    Cells run in a worker pool; results keep the suite's cell order.
    """
    cells = bench_cells(suite, cfg)
    outputs = OutputManager(out_dir)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = [executor.submit(cell) for cell in cells]
        results = [future.result() for future in tqdm(futures, desc=suite, unit="cell")]

    bench = {"suite": suite, "cells": results, "config": cfg.to_dict()}
    save_json_file(bench, outputs.bench_path())
    logger.info(f"Bench suite '{suite}' finished {len(results)} cells")
    return bench
