#!/usr/bin/env python3
"""
Wave Packet Transform Test

Tests for the mother wave packet, the scale ladder, the forward transform,
synchrosqueezing and reconstruction from masked coefficients.
"""

import os
import sys
import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy.integrate import quad

# Add project to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core import Signal, TimeGrid
from src.exceptions import TransformError
from src.transform import (
    default_tf_bins,
    forward_wp,
    inst_freq_info,
    invert_on_support,
    mother_wavepacket_hat,
    scale_ladder,
    significant,
    synchrosqueeze,
)
from src.utils.config import WavePacketConfig


class WavePacketTest(unittest.TestCase):
    """Tests for the mother wave packet and the scales."""

    def setUp(self):
        self.cfg = WavePacketConfig(freq_max=256.0)

    def test_01_unit_norm_and_compact_support(self):
        energy, _ = quad(lambda xi: mother_wavepacket_hat(xi, self.cfg) ** 2, -1.0, 1.0, limit=200)
        self.assertAlmostEqual(energy, 1.0, places=6)
        self.assertEqual(mother_wavepacket_hat(1.0, self.cfg), 0.0)
        self.assertEqual(mother_wavepacket_hat(-1.5, self.cfg), 0.0)
        self.assertGreater(mother_wavepacket_hat(0.0, self.cfg), 0.0)

    def test_02_scale_ladder_growth(self):
        scales = scale_ladder(self.cfg)
        self.assertEqual(scales[0], self.cfg.freq_min)
        self.assertLessEqual(scales[-1], self.cfg.freq_max)
        expected = scales[:-1] + self.cfg.rad * scales[:-1] ** self.cfg.s_geom / self.cfg.red
        assert_allclose(scales[1:], expected)

    def test_03_default_bins(self):
        self.assertEqual(default_tf_bins(self.cfg), 257)


class ForwardTransformTest(unittest.TestCase):
    """Tests for the forward transform and synchrosqueezing of simple signals."""

    @classmethod
    def setUpClass(cls):
        cls.cfg = WavePacketConfig(freq_max=256.0)
        cls.L = 1024
        cls.grid = TimeGrid.uniform_grid(cls.L)
        cls.tone = Signal(cls.grid, np.exp(2j * np.pi * 60 * cls.grid.points))
        cls.wp = forward_wp(cls.tone, cls.cfg)

    def test_01_rejects_nonuniform_grid(self):
        grid = TimeGrid.from_points(np.sort(np.random.default_rng(0).random(64)))
        with self.assertRaises(TransformError):
            forward_wp(Signal(grid, np.ones(64)), self.cfg)

    def test_02_pure_tone_frequency_is_exact(self):
        v = inst_freq_info(self.wp, self.cfg)
        finite = np.isfinite(v)
        self.assertTrue(finite.any())
        assert_allclose(v[finite], 60.0, atol=1e-6)

    def test_03_pure_tone_squeezes_into_one_bin(self):
        tf = synchrosqueeze(self.wp, self.cfg)
        self.assertEqual(tf.bin_width, 1.0)
        rows = np.nonzero(tf.energy.sum(axis=1) > 0)[0]
        self.assertEqual(rows.tolist(), [60])
        self.assertTrue(np.all(tf.energy >= 0))

    def test_04_energy_is_weighted_coefficient_energy(self):
        tf = synchrosqueeze(self.wp, self.cfg)
        mask = significant(self.wp, self.cfg)
        da = np.gradient(self.wp.scales)
        expected = np.sum((np.abs(self.wp.coeffs) ** 2 * da[:, None])[mask])
        self.assertAlmostEqual(tf.total_energy(), expected, delta=1e-9 * expected)

    def test_05_too_few_bins(self):
        with self.assertRaises(TransformError):
            synchrosqueeze(self.wp, self.cfg, nbins=1)

    def test_06_full_mask_reconstructs_the_tone(self):
        component = invert_on_support(self.wp, np.ones(self.wp.shape, dtype=bool), self.cfg)
        assert_allclose(component.values, self.tone.values, atol=1e-8)

    def test_07_empty_mask_gives_zero(self):
        with self.assertLogs("src.transform", level="WARNING"):
            component = invert_on_support(self.wp, np.zeros(self.wp.shape, dtype=bool), self.cfg)
        assert_allclose(component.values, 0.0)

    def test_08_worker_count_does_not_change_output(self):
        parallel = forward_wp(self.tone, WavePacketConfig(freq_max=256.0, workers=3))
        assert_allclose(parallel.coeffs, self.wp.coeffs)
        assert_allclose(parallel.dcoeffs, self.wp.dcoeffs)

    def test_09_modulated_tone_frequency_at_the_ridge(self):
        t = self.grid.points
        phase = 100 * t + 5 / (2 * np.pi) * np.sin(2 * np.pi * t)
        wp = forward_wp(Signal(self.grid, np.exp(2j * np.pi * phase)), self.cfg)
        v = inst_freq_info(wp, self.cfg)
        peak = np.argmax(np.abs(wp.coeffs), axis=0)
        estimate = v[peak, np.arange(wp.times.size)]
        truth = 100 + 5 * np.cos(2 * np.pi * wp.times)
        assert_allclose(estimate, truth, atol=1.0)

    def test_10_transform_is_linear(self):
        t = self.grid.points
        other = Signal(self.grid, np.cos(2 * np.pi * 90 * t) + 0.3 * np.sin(2 * np.pi * 17 * t))
        total = forward_wp(Signal(self.grid, self.tone.values + 2.0 * other.values), self.cfg)
        separate = forward_wp(other, self.cfg)
        assert_allclose(total.coeffs, self.wp.coeffs + 2.0 * separate.coeffs, atol=1e-10)
        assert_allclose(total.dcoeffs, self.wp.dcoeffs + 2.0 * separate.dcoeffs, atol=1e-8)

    def test_11_band_mask_separates_two_tones(self):
        tone90 = np.exp(2j * np.pi * 90 * self.grid.points)
        wp = forward_wp(Signal(self.grid, self.tone.values + tone90), self.cfg)
        v = inst_freq_info(wp, self.cfg)
        component = invert_on_support(wp, np.abs(v - 60.0) < 15.0, self.cfg)
        error = np.linalg.norm(component.values - self.tone.values) / np.linalg.norm(self.tone.values)
        self.assertLess(error, 0.05)

    def test_12_chirp_frequency_on_the_significant_set(self):
        t = self.grid.points
        wp = forward_wp(Signal(self.grid, np.exp(2j * np.pi * 60 * (t + 0.01 * np.sin(2 * np.pi * t)))), self.cfg)
        v = inst_freq_info(wp, self.cfg)
        truth = 60 * (1 + 0.02 * np.pi * np.cos(2 * np.pi * wp.times))
        finite = np.isfinite(v)
        relative = np.abs(v - truth[None, :]) / truth[None, :]
        self.assertLess(np.median(relative[finite]), 0.01)
        self.assertGreater(np.mean(relative[finite] < 0.05), 0.95)
        magnitude = np.abs(wp.coeffs)
        central = magnitude >= 0.5 * magnitude.max(axis=0, keepdims=True)
        self.assertLess(relative[central].max(), 0.05)

    def test_13_modulated_amplitude_is_recovered(self):
        t = self.grid.points
        envelope = 1 + 0.05 * np.sin(2 * np.pi * t)
        wp = forward_wp(Signal(self.grid, envelope * self.tone.values), self.cfg)
        v = inst_freq_info(wp, self.cfg)
        amplitude = np.abs(invert_on_support(wp, np.abs(v - 60.0) <= 3.0, self.cfg).values)
        scale = np.dot(amplitude, envelope) / np.dot(envelope, envelope)
        self.assertLess(np.linalg.norm(amplitude - scale * envelope) / np.linalg.norm(scale * envelope), 0.05)
        self.assertGreater(np.corrcoef(amplitude, envelope)[0, 1], 0.9)


if __name__ == "__main__":
    unittest.main()
