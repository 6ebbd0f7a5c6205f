#!/usr/bin/env python3
"""
Diagnostics Test

Tests for well-differentiation counts, convergence rates, SNR, folding
uniformity and shape errors.
"""

import math
import os
import sys
import unittest

import numpy as np
from numpy.testing import assert_allclose

# Add project to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core import InstProfile, ShapeEstimate, Signal, TimeGrid
from src.diagnostics import (
    convergence_rates,
    decomposition_diagnostics,
    fold_uniformity,
    shape_error,
    snr_db,
    well_differentiation,
)
from src.exceptions import ValidationError
from src.synth import sigma2_for_snr


def _linear_profile(grid: TimeGrid, N: float) -> InstProfile:
    return InstProfile(N * grid.points, np.ones(len(grid)))


class WellDifferentiationTest(unittest.TestCase):
    """Tests for the joint and marginal bin counts."""

    def setUp(self):
        self.grid = TimeGrid.uniform_grid(4096)

    def test_01_single_mode(self):
        report = well_differentiation([_linear_profile(self.grid, 60)], self.grid, 8)
        self.assertEqual(report.gamma, math.inf)
        self.assertEqual(report.beta, 0.0)
        self.assertEqual(int(report.d_marginal[0].sum()), 4096)

    def test_02_commensurate_phases_leave_empty_joint_bins(self):
        profiles = [_linear_profile(self.grid, 60), _linear_profile(self.grid, 90)]
        report = well_differentiation(profiles, self.grid, 8, M=1.0)
        self.assertEqual(report.gamma, 0)
        self.assertGreater(report.beta, 0.0)
        self.assertAlmostEqual(report.contraction, report.beta)
        self.assertEqual(int(report.d_joint[(0, 1)].sum()), 4096)
        self.assertEqual(set(report.to_dict()["beta_pairs"]), {"1,2", "2,1"})

    def test_03_too_many_bins_warns(self):
        grid = TimeGrid.uniform_grid(64)
        profiles = [_linear_profile(grid, 3), _linear_profile(grid, 5)]
        with self.assertLogs("src.diagnostics", level="WARNING"):
            well_differentiation(profiles, grid, 16)

    def test_04_invalid_bins(self):
        with self.assertRaises(ValidationError):
            well_differentiation([_linear_profile(self.grid, 60)], self.grid, 1)


class ConvergenceRatesTest(unittest.TestCase):
    """Tests for the mu and eta sequences."""

    def test_01_geometric_norms(self):
        mu, eta = convergence_rates([1.0, 0.1, 0.01, 0.001])
        assert_allclose(mu, np.log([0.9, 0.09, 0.009]))
        assert_allclose(eta, [np.log(10), np.log(10)])

    def test_02_underflow_is_nan(self):
        mu, eta = convergence_rates([1.0, 0.5, 0.5])
        self.assertTrue(np.isnan(mu[1]))
        self.assertTrue(np.isnan(eta[0]))

    def test_03_too_few_norms(self):
        with self.assertRaises(ValidationError):
            convergence_rates([1.0, 0.5])


class SnrTest(unittest.TestCase):
    """Tests for the SNR and its inverse."""

    def setUp(self):
        self.mode = Signal(TimeGrid.uniform_grid(100), np.ones(100))

    def test_01_snr_values(self):
        self.assertAlmostEqual(snr_db([self.mode], 1.0), 0.0)
        self.assertAlmostEqual(snr_db([self.mode], 2.0), -3.0103, places=4)

    def test_02_inverse(self):
        sigma2 = sigma2_for_snr([self.mode], -3.0)
        self.assertAlmostEqual(snr_db([self.mode], sigma2), -3.0)

    def test_03_zero_noise(self):
        with self.assertRaises(ValidationError):
            snr_db([self.mode], 0.0)


class FoldUniformityTest(unittest.TestCase):
    """Tests for the folding histogram."""

    def setUp(self):
        self.grid = TimeGrid.uniform_grid(1024)

    def test_01_whole_periods_fold_uniformly(self):
        histogram = fold_uniformity(_linear_profile(self.grid, 8), self.grid, 8)
        assert_allclose(histogram.counts, 128)
        self.assertEqual(histogram.chi2, 0.0)
        self.assertEqual(histogram.edges.size, 9)

    def test_02_half_period_concentrates(self):
        histogram = fold_uniformity(_linear_profile(self.grid, 0.5), self.grid, 8)
        assert_allclose(histogram.counts, [256, 256, 256, 256, 0, 0, 0, 0])
        self.assertAlmostEqual(histogram.chi2, 1024.0)


class ShapeErrorTest(unittest.TestCase):
    """Tests for the shape error with alignment and scaling."""

    def setUp(self):
        x = np.arange(1000) / 1000
        self.truth = ShapeEstimate(np.cos(2 * np.pi * x))
        self.shifted = ShapeEstimate(np.cos(2 * np.pi * (x - 0.1)))

    def test_01_alignment(self):
        self.assertLess(shape_error(self.shifted, self.truth), 1e-10)
        self.assertGreater(shape_error(self.shifted, self.truth, align=False), 0.1)

    def test_02_scaling(self):
        doubled = ShapeEstimate(2 * self.truth.samples)
        self.assertLess(shape_error(doubled, self.truth), 1e-12)
        self.assertAlmostEqual(shape_error(doubled, self.truth, align=False, scale=False), 1.0)

    def test_03_diagnostics_summary(self):
        grid = TimeGrid.uniform_grid(4096)
        profiles = [_linear_profile(grid, 60), _linear_profile(grid, 90)]
        summary = decomposition_diagnostics(profiles, grid, [1.0, 0.5], nbins=8)
        self.assertEqual(len(summary["chi2"]), 2)
        self.assertIsNone(summary["mu"])
        self.assertIn("gamma", summary)


if __name__ == "__main__":
    unittest.main()
