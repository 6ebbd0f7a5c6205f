#!/usr/bin/env python3
"""
Tables and Output Files Test

Tests for the CSV tables, the dense time-frequency dump, the output-directory
layout and the atomic JSON helpers.
"""

import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

# Add project to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core import InstProfile, Signal, TimeGrid
from src.exceptions import DataFormatError
from src.synth import builtin_shape
from src.utils.paths import OutputManager, load_json_file, save_json_file, to_json_safe
from src.utils.tables import (
    read_profile_csv,
    read_shape_csv,
    read_signal_csv,
    read_tf_binary,
    write_profile_csv,
    write_shape_csv,
    write_signal_csv,
    write_tf_binary,
    write_tf_csv,
)


class TablesTest(unittest.TestCase):
    """Tests for reading and writing CSV tables."""

    @classmethod
    def setUpClass(cls):
        cls.test_dir = Path(tempfile.mkdtemp())

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.test_dir)

    def _write(self, name: str, content: str) -> Path:
        path = self.test_dir / name
        path.write_text(content, encoding="utf-8")
        return path

    def test_01_signal_values_survive_exactly(self):
        grid = TimeGrid.uniform_grid(64)
        values = np.random.default_rng(0).normal(size=64) / 3.0
        path = self.test_dir / "signal.csv"
        write_signal_csv(Signal(grid, values), path)
        sig = read_signal_csv(path)
        self.assertTrue(sig.grid.uniform)
        assert_array_equal(sig.values, values)

    def test_02_complex_signal_columns(self):
        grid = TimeGrid.uniform_grid(8)
        path = self.test_dir / "complex.csv"
        write_signal_csv(Signal(grid, np.exp(2j * np.pi * grid.points)), path)
        self.assertEqual(path.read_text().splitlines()[0], "t,re,im")
        self.assertTrue(read_signal_csv(path).is_complex)

    def test_03_nonuniform_signal(self):
        sig = read_signal_csv(self._write("nonuniform.csv", "t,value\n0.1,1\n0.35,2\n0.9,3\n"))
        self.assertFalse(sig.grid.uniform)
        assert_allclose(sig.values, [1.0, 2.0, 3.0])

    def test_04_empty_file(self):
        with self.assertRaises(DataFormatError) as context:
            read_signal_csv(self._write("empty.csv", ""))
        self.assertEqual(context.exception.line, 1)

    def test_05_header_only(self):
        with self.assertRaises(DataFormatError) as context:
            read_signal_csv(self._write("header.csv", "t,value\n"))
        self.assertEqual(context.exception.line, 2)

    def test_06_non_numeric_value_reports_its_line(self):
        with self.assertRaises(DataFormatError) as context:
            read_signal_csv(self._write("text.csv", "t,value\n0,1\n0.5,abc\n"))
        self.assertEqual(context.exception.line, 3)
        self.assertIn("line 3", str(context.exception))

    def test_07_extra_field_reports_its_line(self):
        with self.assertRaises(DataFormatError) as context:
            read_signal_csv(self._write("ragged.csv", "t,value\n0,1\n0.5,2,3\n"))
        self.assertEqual(context.exception.line, 3)

    def test_08_missing_column(self):
        with self.assertRaises(DataFormatError) as context:
            read_signal_csv(self._write("columns.csv", "time,value\n0,1\n"))
        self.assertEqual(context.exception.line, 1)

    def test_09_decreasing_times(self):
        with self.assertRaises(DataFormatError):
            read_signal_csv(self._write("order.csv", "t,value\n0.5,1\n0.1,2\n"))

    def test_10_profile_must_match_the_grid(self):
        grid = TimeGrid.uniform_grid(16)
        path = self.test_dir / "profile.csv"
        write_profile_csv(InstProfile(3 * grid.points, np.ones(16)), grid, path)
        assert_allclose(read_profile_csv(path, grid).phase, 3 * grid.points)
        with self.assertRaises(DataFormatError):
            read_profile_csv(path, TimeGrid.uniform_grid(32))

    def test_11_shape_table(self):
        path = self.test_dir / "shape.csv"
        shape = builtin_shape("pwl_saw", 100)
        write_shape_csv(shape, path)
        assert_array_equal(read_shape_csv(path).samples, shape.samples)

    def test_12_sparse_tf_table(self):
        energy = np.zeros((4, 3))
        energy[1, 0] = 2.0
        energy[3, 2] = 0.5
        path = self.test_dir / "tf.csv"
        rows = write_tf_csv(np.arange(4.0), np.arange(3) / 3, energy, path)
        self.assertEqual(rows, 2)
        self.assertEqual(path.read_text().splitlines()[0], "b,v,energy")

    def test_13_tf_binary(self):
        energy = np.arange(12.0).reshape(3, 4)
        path = self.test_dir / "tf.bin"
        write_tf_binary(energy, path)
        self.assertEqual(path.stat().st_size, 24 + 12 * 8)
        assert_array_equal(read_tf_binary(path), energy)
        truncated = self.test_dir / "truncated.bin"
        truncated.write_bytes(path.read_bytes()[:40])
        with self.assertRaises(DataFormatError):
            read_tf_binary(truncated)


class OutputFilesTest(unittest.TestCase):
    """Tests for the output manager and JSON helpers."""

    @classmethod
    def setUpClass(cls):
        cls.test_dir = Path(tempfile.mkdtemp())

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.test_dir)

    def test_01_output_manager_records_files(self):
        outputs = OutputManager(self.test_dir / "run")
        self.assertTrue(outputs.out_dir.is_dir())
        self.assertEqual(outputs.mode_path(2).name, "mode_2.csv")
        self.assertEqual(outputs.report_path().name, "report.json")
        self.assertEqual(len(outputs.written), 2)

    def test_02_non_finite_values_become_strings(self):
        data = to_json_safe({"snr": np.inf, "mu": [np.nan, 1.0], "n": np.int64(3), "a": np.arange(2)})
        self.assertEqual(data, {"snr": "inf", "mu": ["nan", 1.0], "n": 3, "a": [0, 1]})

    def test_03_save_and_load(self):
        path = self.test_dir / "meta.json"
        save_json_file({"snr": float("-inf"), "K": 2}, path)
        self.assertEqual(load_json_file(path), {"snr": "-inf", "K": 2})
        self.assertTrue(path.read_text(encoding="utf-8").endswith("\n"))

    def test_04_invalid_json_reports_its_line(self):
        path = self.test_dir / "broken.json"
        path.write_text('{\n  "K": 2,\n  oops\n}\n', encoding="utf-8")
        with self.assertRaises(DataFormatError) as context:
            load_json_file(path)
        self.assertEqual(context.exception.line, 3)


if __name__ == "__main__":
    unittest.main()
