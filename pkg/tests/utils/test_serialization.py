import tempfile
import unittest
from pathlib import Path

import numpy as np

from utils.serialization import (
    deserialize_value,
    format_float,
    load_json,
    save_json,
    serialize_value,
)


class TestSerialization(unittest.TestCase):
    def test_complex_array_survives_json(self):
        payload = {
            "at_zero": np.array([[1.0 + 2.0j, 0.0], [0.5j, 3.0]]),
            "trace": [(16, 0.25), (32, 0.125)],
            "residual": float("inf"),
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = save_json(Path(tmp) / "nested" / "report.json", payload)
            restored = load_json(path)
        np.testing.assert_array_equal(restored["at_zero"], payload["at_zero"])
        self.assertEqual(restored["trace"], payload["trace"])
        self.assertEqual(restored["residual"], float("inf"))

    def test_numpy_scalars_become_python(self):
        encoded = serialize_value({"flag": np.bool_(True), "n": np.int64(3)})
        self.assertIs(encoded["flag"], True)
        self.assertIsInstance(encoded["n"], int)

    def test_nan_is_tagged(self):
        encoded = serialize_value(float("nan"))
        self.assertEqual(encoded, {"__float__": "nan"})
        self.assertTrue(np.isnan(deserialize_value(encoded)))

    def test_format_float_keeps_17_digits(self):
        self.assertEqual(format_float(0.1), "0.10000000000000001")


if __name__ == "__main__":
    unittest.main()
