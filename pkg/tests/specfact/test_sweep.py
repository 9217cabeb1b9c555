import os
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from specfact.config import FamilyConfig
from specfact.sweep import (
    CellResult,
    SweepResult,
    exponent_band_check,
    loglog_fit,
    onset_eps,
    sweep,
    write_sweep,
)
from utils.serialization import load_json

SLOW = os.environ.get("SPECFACT_SLOW") == "1"


class TestFits(unittest.TestCase):
    def test_loglog_fit(self):
        fit = loglog_fit([1.0, 10.0, 100.0], [2.0, 20.0, 200.0])
        self.assertAlmostEqual(fit["slope"], 1.0)
        self.assertAlmostEqual(fit["intercept"], np.log(2.0))
        self.assertEqual(fit["points"], 3)

    def test_loglog_fit_skips_unusable_points(self):
        fit = loglog_fit([1.0, 2.0, -1.0, np.nan], [1.0, 4.0, 5.0, 1.0])
        self.assertAlmostEqual(fit["slope"], 2.0)
        self.assertEqual(fit["points"], 2)
        self.assertIsNone(loglog_fit([1.0], [1.0]))
        self.assertIsNone(loglog_fit([], []))

    def test_onset_eps(self):
        eps = [1e-1, 1e-2, 1e-3]
        self.assertEqual(onset_eps(eps, [False, True, True]), 1e-2)
        self.assertEqual(onset_eps(eps, [True, False, True]), 1e-3)
        self.assertEqual(onset_eps(eps, [True, True, True]), 1e-1)
        self.assertIsNone(onset_eps(eps, [True, True, False]))
        self.assertIsNone(onset_eps([], []))


class TestFamilyConfig(unittest.TestCase):
    def test_rejects_bad_configs(self):
        with self.assertRaises(ValidationError):
            FamilyConfig(family="ex1", theorems=["thm9.9"])
        with self.assertRaises(ValidationError):
            FamilyConfig(family="ex1", eps=[1.5])
        with self.assertRaises(ValidationError):
            FamilyConfig(family="ex1", theorems=["thm1.2"])
        with self.assertRaises(ValidationError):
            FamilyConfig(family="scalar6", theorems=["thm1.3"])
        with self.assertRaises(ValidationError):
            FamilyConfig(family="ex3")

    def test_nested_settings(self):
        config = FamilyConfig.model_validate(
            {"family": "ex2", "grid": {"size": 1024, "confirm_by_doubling": False}}
        )
        self.assertEqual(config.grid.size, 1024)
        self.assertFalse(config.grid.confirm_by_doubling)


def band_cells(slope, distances=(1e-3, 1e-4, 1e-5)):
    return [
        CellResult(eps=d, values={"d1": d, "lhs_explicit": 2.0 * d**slope})
        for d in distances
    ]


class TestExponentBand(unittest.TestCase):
    def test_band_for_p1_two(self):
        band = exponent_band_check(band_cells(0.75), 2.0)
        self.assertAlmostEqual(band["low"], 2 / 3 - 0.05)
        self.assertAlmostEqual(band["high"], 0.8 + 0.05)
        self.assertAlmostEqual(band["slope"], 0.75)
        self.assertTrue(band["within"])

    def test_slope_outside_band(self):
        self.assertFalse(exponent_band_check(band_cells(0.9), 2.0)["within"])
        self.assertFalse(exponent_band_check(band_cells(0.5), 2.0)["within"])

    def test_far_cells_are_left_out(self):
        cells = band_cells(0.75) + [
            CellResult(eps=0.5, values={"d1": 0.07, "lhs_explicit": 1.0})
        ]
        band = exponent_band_check(cells, 2.0)
        self.assertNotIn(0.5, band["eps"])
        self.assertAlmostEqual(band["slope"], 0.75)

    def test_single_cell_gives_no_verdict(self):
        band = exponent_band_check(band_cells(0.75, distances=(1e-3,)), 2.0)
        self.assertIsNone(band["slope"])
        self.assertIsNone(band["within"])


class TestSweepOutcome(unittest.TestCase):
    def test_clean_result(self):
        result = SweepResult(family="ex2", cells=band_cells(0.75), summary={})
        self.assertFalse(result.failed)
        self.assertEqual(result.failed_checks, [])

    def test_cell_errors_fail_the_sweep(self):
        cells = [CellResult(eps=1e-4, errors={"lhs": "did not settle"})]
        result = SweepResult(family="scalar6", cells=cells, summary={})
        self.assertFalse(result.has_violation)
        self.assertTrue(result.has_errors)
        self.assertTrue(result.failed)

    def test_failed_band_fails_the_sweep(self):
        summary = {"exponent_band": exponent_band_check(band_cells(0.9), 2.0)}
        result = SweepResult(family="ex2", cells=band_cells(0.9), summary=summary)
        self.assertEqual(result.failed_checks, ["exponent_band"])
        self.assertTrue(result.failed)


class TestSweep(unittest.TestCase):
    def setUp(self):
        self.config = FamilyConfig(
            family="ex1", eps=[0.08, 0.1], grid_size=8192, theorems=["thm1.3"]
        )

    def test_empty_sequence(self):
        result = sweep(FamilyConfig(family="ex1"))
        self.assertEqual(result.cells, [])
        self.assertFalse(result.has_violation)
        self.assertEqual(result.summary["violations"], 0)

    def test_example1_sweep(self):
        result = sweep(self.config)
        self.assertEqual([cell.eps for cell in result.cells], [0.1, 0.08])
        self.assertFalse(result.has_violation)
        self.assertEqual(len(result.reports), 2)
        self.assertEqual(result.summary["onset_eps"]["lower_bound"], 0.1)
        self.assertIsNotNone(result.summary["fits"]["family"]["lhs_vs_d1"])

    def test_workers_do_not_change_results(self):
        serial = sweep(self.config, jobs=1)
        parallel = sweep(self.config, jobs=2)
        pd.testing.assert_frame_equal(serial.frame(), parallel.frame())
        self.assertEqual(serial.summary["checks"], parallel.summary["checks"])

    def test_write_sweep(self):
        result = sweep(self.config.model_copy(update={"eps": [0.1]}))
        with tempfile.TemporaryDirectory() as tmp:
            csv_path = write_sweep(result, tmp, run_config={"command": "sweep"})
            frame = pd.read_csv(csv_path)
            summary = load_json(Path(tmp) / "summary.json")
        self.assertEqual(list(frame["theorem"]), ["thm1.3"])
        self.assertEqual(summary["run_config"], {"command": "sweep"})
        self.assertEqual(summary["family"], "ex1")

    @unittest.skipUnless(SLOW, "set SPECFACT_SLOW=1 for the fine-eps family run")
    def test_example2_exponent_band(self):
        result = sweep(FamilyConfig(family="ex2", eps=[1e-2, 1e-3, 1e-4], theorems=[]))
        band = result.summary["exponent_band"]
        self.assertEqual(len(band["eps"]), 3)
        self.assertTrue(band["within"])
        self.assertFalse(result.failed)


if __name__ == "__main__":
    unittest.main()
