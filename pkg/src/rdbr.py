#!/usr/bin/env python3
"""
Recursive Decomposition Module

This module provides the recursive diffeomorphism-based regression loop: per
iteration every mode's shape increment is regressed from the current
residual, the increments are accumulated and their modes are subtracted from
the residual, until the stopping rule fires.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from src.core import InstProfile, ShapeEstimate, Signal, TimeGrid, eval_shape, norm_of_values
from src.exceptions import DecompositionError
from src.regress import FoldedSamples, check_amplitude, fold_positions, regress
from src.utils.config import RdbrConfig
from src.utils.logging import IterationLogger, get_logger, log_execution

logger = get_logger(__name__)


@dataclass
class RdbrReport:
    """Per-iteration norms and the reason the loop stopped."""
    residual_norms: List[float] = field(default_factory=list)
    shape_increment_norms: List[float] = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = "max_iter"
    initial_norm: float = 0.0
    best_iteration: int = 0

    @property
    def final_residual_norm(self) -> float:
        return self.residual_norms[-1] if self.residual_norms else self.initial_norm

    def to_dict(self) -> dict:
        return {
            "residual_norms": list(self.residual_norms),
            "shape_increment_norms": list(self.shape_increment_norms),
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "initial_norm": self.initial_norm,
            "best_iteration": self.best_iteration,
        }


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Estimated shapes, their modes, the residual and the loop report."""
    shapes: List[ShapeEstimate]
    modes: List[Signal]
    residual: Signal
    report: RdbrReport


def reconstruct_mode(shape: ShapeEstimate, profile: InstProfile, grid: TimeGrid) -> Signal:
    """
    Compose a shape with a profile: alpha(t) * s(p(t)).

    Args:
        shape (ShapeEstimate): One period of the shape
        profile (InstProfile): Phase and amplitude on grid
        grid (TimeGrid): Sample times

    Returns:
        Signal: The generalized mode
    """
    if len(profile) != len(grid):
        raise DecompositionError(f"Profile has {len(profile)} samples for a grid of {len(grid)} points")
    return Signal(grid, profile.amplitude * eval_shape(shape, profile.phase))


def _keep_going(guard: str, j: int, cfg: RdbrConfig, eps0: float, eps1: float, eps2: float) -> bool:
    if guard == "residual_only":
        return j < cfg.max_iter and eps1 > cfg.eps
    return j < cfg.max_iter and eps1 > cfg.eps and eps2 > cfg.eps and abs(eps1 - eps0) > cfg.eps


def _relaxed(increment: ShapeEstimate, relaxation: float) -> ShapeEstimate:
    if relaxation == 1.0:
        return increment
    return ShapeEstimate(relaxation * increment.samples)


def _stop_reason(j: int, cfg: RdbrConfig, eps0: float, eps1: float, eps2: float) -> str:
    if eps1 <= cfg.eps:
        return "residual_small"
    if cfg.guard == "strict":
        if eps2 <= cfg.eps:
            return "increment_small"
        if abs(eps1 - eps0) <= cfg.eps:
            return "stagnation"
    return "max_iter"


@log_execution
def rdbr_decompose(sig: Signal, profiles: List[InstProfile], cfg: RdbrConfig) -> Decomposition:
    """
    Recover the shape of every mode by recursive diffeomorphism-based regression.

    Starting from r = f with eps0 = 2 and eps1 = eps2 = 1, each iteration
    regresses all shape increments from the same residual, removes their
    means, accumulates them and subtracts their modes. The loop runs while
    j < max_iter, eps1 > eps, eps2 > eps and |eps1 - eps0| > eps, where eps1
    is the residual norm and eps2 the largest increment norm (guard
    "residual_only" keeps only the first two conditions).

    With update "sequential" each mode is regressed from the residual left
    by the modes before it in the same iteration, so the per-mode
    regressions run in order. Every increment is scaled by relaxation
    before it is accumulated; 1.0 keeps the plain update.

    If the residual norm exceeds divergence_factor times its minimum, the
    loop stops with reason "stagnation" and the best state so far is
    returned.

    Args:
        sig (Signal): Real input signal
        profiles (List[InstProfile]): One profile per mode, on the signal's grid
        cfg (RdbrConfig): Loop and regression configuration

    Returns:
        Decomposition: Shapes, modes, residual and report

    Raises:
        DecompositionError: If profiles are missing or do not match the signal
    """
    if not profiles:
        raise DecompositionError("At least one profile is required")
    if sig.is_complex:
        raise DecompositionError("The decomposition needs a real-valued signal")
    for k, profile in enumerate(profiles, start=1):
        if len(profile) != len(sig):
            raise DecompositionError(
                f"Profile {k} has {len(profile)} samples but the signal has {len(sig)}"
            )
        check_amplitude(profile, sig.grid.points)

    grid = sig.grid
    times = grid.points
    K = len(profiles)
    G = cfg.regression.grid_size
    folded_x = [fold_positions(p.phase) for p in profiles]

    def _samples(k: int, values: np.ndarray) -> FoldedSamples:
        return FoldedSamples(folded_x[k], values / profiles[k].amplitude, times)

    residual = np.array(sig.values, dtype=float)
    totals = [np.zeros(G) for _ in range(K)]
    report = RdbrReport(initial_norm=norm_of_values(residual, grid))

    best_norm = report.initial_norm
    best_totals = [t.copy() for t in totals]
    min_norm = report.initial_norm
    diverged = False

    eps0, eps1, eps2 = 2.0, 1.0, 1.0
    j = 0
    progress = IterationLogger("rdbr", cfg.max_iter, quantity="residual")

    parallel = cfg.workers > 1 and K > 1 and cfg.update == "simultaneous"
    executor = ThreadPoolExecutor(max_workers=cfg.workers) if parallel else None
    try:
        while _keep_going(cfg.guard, j, cfg, eps0, eps1, eps2):
            if cfg.update == "sequential":
                increments = []
                for k in range(K):
                    increment = _relaxed(regress(_samples(k, residual), cfg.regression), cfg.relaxation)
                    totals[k] += increment.samples
                    residual = residual - profiles[k].amplitude * eval_shape(increment, profiles[k].phase)
                    increments.append(increment)
            else:
                samples = [_samples(k, residual) for k in range(K)]
                if executor is not None:
                    futures = [executor.submit(regress, fs, cfg.regression) for fs in samples]
                    increments = [_relaxed(future.result(), cfg.relaxation) for future in futures]
                else:
                    increments = [_relaxed(regress(fs, cfg.regression), cfg.relaxation) for fs in samples]

                for k, increment in enumerate(increments):
                    totals[k] += increment.samples
                    residual = residual - profiles[k].amplitude * eval_shape(increment, profiles[k].phase)

            eps0 = eps1
            eps1 = norm_of_values(residual, grid)
            eps2 = max(increment.norm() for increment in increments)
            j += 1

            report.residual_norms.append(eps1)
            report.shape_increment_norms.append(eps2)
            progress.record(eps1, f"increment {eps2:.3e}")

            if eps1 < best_norm:
                best_norm = eps1
                best_totals = [t.copy() for t in totals]
                report.best_iteration = j
            min_norm = min(min_norm, eps1)
            if eps1 > cfg.divergence_factor * min_norm:
                logger.warning(
                    f"Residual norm {eps1:.3e} exceeds {cfg.divergence_factor} x its minimum {min_norm:.3e}; "
                    f"returning the state of iteration {report.best_iteration}"
                )
                diverged = True
                break
    finally:
        if executor is not None:
            executor.shutdown()

    report.iterations = j
    if diverged:
        report.stop_reason = "stagnation"
        totals = best_totals
    else:
        report.stop_reason = _stop_reason(j, cfg, eps0, eps1, eps2)
    progress.complete(report.stop_reason)

    shapes = [ShapeEstimate(t) for t in totals]
    modes = [reconstruct_mode(s, p, grid) for s, p in zip(shapes, profiles)]
    final_residual = np.array(sig.values, dtype=float)
    for mode in modes:
        final_residual = final_residual - mode.values

    logger.info(
        f"Decomposition of {K} modes stopped after {j} iterations ({report.stop_reason}), "
        f"residual {report.final_residual_norm:.3e} of {report.initial_norm:.3e}"
    )
    return Decomposition(shapes, modes, Signal(grid, final_residual), report)
