#!/usr/bin/env python3
"""
Regression Test

Tests for warping and folding a residual and for the partition and spline
estimates of one period of a shape.
"""

import os
import sys
import unittest
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_allclose

# Add project to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core import InstProfile, ShapeEstimate, Signal, TimeGrid, eval_shape
from src.diagnostics import shape_error
from src.exceptions import RegressionError
from src.regress import (
    FoldedSamples,
    curvature_knots,
    fold_positions,
    partition_bin_means,
    partition_regress,
    regress,
    spline_regress,
    warp_and_fold,
)
from src.synth import builtin_shape, regression_toy
from src.utils.config import RegressionConfig


class FoldingTest(unittest.TestCase):
    """Tests for fold_positions and warp_and_fold."""

    def test_01_fold_positions_stay_below_one(self):
        xs = fold_positions(np.array([-1e-20, 0.25, 1.0, 2.75, -0.25]))
        assert_allclose(xs, [0.0, 0.25, 0.0, 0.75, 0.75])
        self.assertTrue(np.all(xs < 1.0))

    def test_02_warp_and_fold_divides_by_amplitude(self):
        grid = TimeGrid.uniform_grid(1000)
        t = grid.points
        phase = 3 * t
        amplitude = 2 + np.sin(2 * np.pi * t)
        residual = Signal(grid, amplitude * np.cos(2 * np.pi * phase))
        fs = warp_and_fold(residual, InstProfile(phase, amplitude))
        assert_allclose(fs.ys, np.cos(2 * np.pi * fs.xs), atol=1e-12)
        assert_allclose(fs.source_times, t)

    def test_03_vanishing_amplitude_names_the_time(self):
        grid = TimeGrid.uniform_grid(10)
        amplitude = np.ones(10)
        amplitude[5] = 0.0
        profile = InstProfile(grid.points, amplitude, validate=False)
        with self.assertRaises(RegressionError) as context:
            warp_and_fold(Signal(grid, np.ones(10)), profile)
        self.assertIn("t=0.5", str(context.exception))

    def test_04_length_mismatch(self):
        grid = TimeGrid.uniform_grid(10)
        profile = InstProfile(np.arange(5) / 5, np.ones(5))
        with self.assertRaises(RegressionError):
            warp_and_fold(Signal(grid, np.ones(10)), profile)

    def test_05_integer_phase_shift_keeps_the_folded_positions(self):
        grid = TimeGrid.uniform_grid(2048)
        t = grid.points
        phase = 60 * (t + 0.01 * np.sin(2 * np.pi * t))
        residual = Signal(grid, np.cos(2 * np.pi * phase))
        base = warp_and_fold(residual, InstProfile(phase, np.ones(2048)))
        for shift in (1.0, 7.0, 100.0):
            moved = warp_and_fold(residual, InstProfile(phase + shift, np.ones(2048)))
            distance = np.abs(moved.xs - base.xs)
            assert_allclose(np.minimum(distance, 1.0 - distance), 0.0, atol=1e-12)
            assert_allclose(moved.ys, base.ys)


class PartitionRegressTest(unittest.TestCase):
    """Tests for partition-based regression."""

    def test_01_bin_means(self):
        xs = np.array([0.1, 0.2, 0.6, 0.7])
        fs = FoldedSamples(xs, np.array([1.0, 3.0, 4.0, 6.0]), xs.copy())
        means, counts = partition_bin_means(fs, 2)
        assert_allclose(means, [2.0, 5.0])
        assert_allclose(counts, [2, 2])

    def test_02_empty_bins_are_interpolated(self):
        xs = np.array([0.1, 0.6])
        fs = FoldedSamples(xs, np.array([1.0, -1.0]), xs.copy())
        shape = partition_regress(fs, RegressionConfig(nbins=4, grid_size=8))
        self.assertTrue(np.all(np.isfinite(shape.samples)))
        self.assertTrue(shape.is_centered)

    def test_03_no_samples(self):
        empty = np.array([])
        with self.assertRaises(RegressionError):
            partition_regress(FoldedSamples(empty, empty, empty), RegressionConfig())

    def test_04_clean_cosine(self):
        xs = np.arange(10000) / 10000
        fs = FoldedSamples(xs, np.cos(2 * np.pi * xs), xs.copy())
        shape = partition_regress(fs, RegressionConfig(nbins=50))
        truth = ShapeEstimate(np.cos(2 * np.pi * np.arange(1000) / 1000))
        self.assertLess(shape_error(shape, truth, align=False, scale=False), 0.01)

    def test_05_noisy_triangle(self):
        truth = builtin_shape("pwl_triangle")
        shape = partition_regress(regression_toy(truth, 4096, 0.5, seed=1), RegressionConfig(nbins=50))
        self.assertLess(shape_error(shape, truth, align=False, scale=False), 0.08)

    def test_06_default_bin_count_follows_the_sample_count(self):
        cfg = RegressionConfig()
        self.assertEqual(cfg.partition_bins(1000), 50)
        self.assertEqual(cfg.partition_bins(2 ** 12), 64)
        self.assertEqual(cfg.partition_bins(2 ** 16), 256)
        self.assertEqual(RegressionConfig(grid_size=100).partition_bins(2 ** 16), 100)
        self.assertEqual(RegressionConfig(nbins=7).partition_bins(2 ** 16), 7)

    def test_07_bin_constant_target_is_exact(self):
        rng = np.random.default_rng(4)
        xs = rng.random(500)
        levels = np.array([3.0, -1.0, 0.5, 2.0, -4.0])
        ys = levels[np.minimum((xs * 5).astype(int), 4)]
        shape = partition_regress(FoldedSamples(xs, ys, xs.copy()), RegressionConfig(nbins=5, grid_size=10))
        recovered = shape.samples[1::2]
        assert_allclose(recovered - recovered[0], levels - levels[0], atol=1e-12)

    def test_08_refitting_an_estimate_returns_it(self):
        cfg = RegressionConfig(nbins=50)
        first = partition_regress(regression_toy(builtin_shape("pwl_saw"), 4096, 0.3, seed=5), cfg)
        centers = (np.arange(50) + 0.5) / 50
        refit = partition_regress(FoldedSamples(centers, eval_shape(first, centers), centers.copy()), cfg)
        assert_allclose(refit.samples, first.samples, atol=1e-10)

    def test_09_error_falls_with_more_samples(self):
        truth = builtin_shape("cosine")
        cfg = RegressionConfig(nbins=50)
        sizes = [2 ** p for p in range(8, 15)]
        errors = [
            np.mean([
                shape_error(partition_regress(regression_toy(truth, L, 0.5, seed=s), cfg), truth, align=False, scale=False)
                for s in range(10)
            ])
            for L in sizes
        ]
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])))
        self.assertLess(errors[-1], 0.05)


class SplineRegressTest(unittest.TestCase):
    """Tests for least-squares spline regression with knot removal."""

    def setUp(self):
        self.cfg = RegressionConfig(method="spline")
        self.truth = builtin_shape("pwl_triangle")

    def test_01_clean_triangle(self):
        shape = spline_regress(regression_toy(self.truth, 4096, 0.0, seed=2), self.cfg)
        self.assertTrue(shape.is_centered)
        self.assertEqual(shape.grid_size, self.cfg.grid_size)
        self.assertLess(shape_error(shape, self.truth, align=False, scale=False), 0.02)

    def test_02_noisy_triangle(self):
        shape = spline_regress(regression_toy(self.truth, 4096, 0.5, seed=3), self.cfg)
        self.assertLess(shape_error(shape, self.truth, align=False, scale=False), 0.08)

    def test_03_too_few_samples(self):
        with self.assertRaises(RegressionError):
            spline_regress(regression_toy(self.truth, 50, 0.0), self.cfg)

    def test_04_regress_dispatches_on_method(self):
        fs = regression_toy(self.truth, 200, 0.0)
        with patch("src.regress.spline_regress", return_value=ShapeEstimate.zeros()) as spline:
            regress(fs, self.cfg)
            spline.assert_called_once()
        with patch("src.regress.spline_regress") as spline:
            regress(fs, RegressionConfig(method="partition"))
            spline.assert_not_called()

    def test_05_knots_gather_at_a_sharp_peak(self):
        ecg = builtin_shape("ecg1")
        knots = curvature_knots(regression_toy(ecg, 2 ** 14, 0.0, seed=6), self.cfg)
        self.assertEqual(knots[0], 0.0)
        self.assertTrue(np.all(np.diff(knots) > 0))
        near_peak = np.sum((knots > 0.44) & (knots < 0.56))
        self.assertGreaterEqual(near_peak, 5)

    def test_06_flat_samples_keep_equispaced_knots(self):
        xs = np.arange(1000) / 1000
        knots = curvature_knots(FoldedSamples(xs, np.zeros(1000), xs.copy()), self.cfg)
        assert_allclose(knots, np.linspace(0.0, 1.0, self.cfg.nk))

    def test_07_clean_ecg_shape(self):
        ecg = builtin_shape("ecg1")
        shape = spline_regress(regression_toy(ecg, 2 ** 14, 0.0, seed=7), self.cfg)
        self.assertLess(shape_error(shape, ecg, align=False, scale=False), 0.1)

    def test_08_noisy_cosine(self):
        cosine = builtin_shape("cosine")
        shape = spline_regress(regression_toy(cosine, 4096, 0.5, seed=8), self.cfg)
        self.assertLess(shape_error(shape, cosine, align=False, scale=False), 0.05)


if __name__ == "__main__":
    unittest.main()
