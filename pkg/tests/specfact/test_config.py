import os
import unittest
from pathlib import Path
from unittest import mock

from pydantic import ValidationError

from specfact.config import (
    OUT_DIR_ENV,
    FamilyConfig,
    GridSettings,
    RunConfig,
    default_log_level,
)


class TestGridSettings(unittest.TestCase):
    def test_size(self):
        self.assertEqual(GridSettings(size=16).size, 16)
        for bad in (8, 100, 0):
            with self.subTest(size=bad):
                with self.assertRaises(ValidationError):
                    GridSettings(size=bad)

    def test_frozen(self):
        with self.assertRaises(ValidationError):
            GridSettings().size = 32


class TestRunConfig(unittest.TestCase):
    def test_output_root(self):
        with mock.patch.dict(os.environ, {OUT_DIR_ENV: "/tmp/specfact-env"}):
            self.assertEqual(
                RunConfig(command="constants").output_root(), Path("/tmp/specfact-env")
            )
            explicit = RunConfig(command="constants", out_dir="results")
            self.assertEqual(explicit.output_root(), Path("results"))
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(
                RunConfig(command="constants").output_root(), Path("specfact-out")
            )

    def test_json_round_trip(self):
        config = RunConfig(
            command="sweep",
            jobs=2,
            family_config=FamilyConfig(family="ex2", eps=[0.1], theorems=["thm1.4"]),
        )
        restored = RunConfig.model_validate_json(config.model_dump_json())
        self.assertEqual(restored, config)

    def test_jobs_must_be_positive(self):
        with self.assertRaises(ValidationError):
            RunConfig(command="sweep", jobs=0)

    def test_log_level(self):
        with mock.patch.dict(os.environ, {"SPECFACT_LOG_LEVEL": "debug"}):
            self.assertEqual(default_log_level(), "DEBUG")


if __name__ == "__main__":
    unittest.main()
