import unittest

import numpy as np

from utils.expressions import ExpressionError, evaluate_on_samples, safe_eval


class TestSafeEval(unittest.TestCase):
    def test_safe_arithmetic(self):
        self.assertEqual(safe_eval("1 + 1"), 2)
        self.assertEqual(safe_eval("a + b", local_vars={"a": 1, "b": 2}), 3)

    def test_numpy_functions(self):
        values = evaluate_on_samples("log1p(x / 2)", [0.0, 2.0])
        np.testing.assert_allclose(values, [0.0, np.log(2.0)])

    def test_where_and_constants(self):
        values = evaluate_on_samples("where(x > 1, pi, e)", [0.0, 2.0])
        np.testing.assert_allclose(values, [np.e, np.pi])

    def test_constant_expression_broadcasts(self):
        values = evaluate_on_samples("2", [0.0, 1.0, 3.0])
        np.testing.assert_allclose(values, [2.0, 2.0, 2.0])

    def test_unsafe_import(self):
        with self.assertRaises(ExpressionError):
            safe_eval("import os")

    def test_unsafe_dunder(self):
        with self.assertRaises(ExpressionError):
            safe_eval("__import__('os')")

    def test_unsafe_attribute(self):
        with self.assertRaises(ExpressionError):
            safe_eval("x.__class__", local_vars={"x": 1.0})

    def test_unknown_name(self):
        with self.assertRaises(ExpressionError):
            evaluate_on_samples("y + 1", [1.0])

    def test_string_constant(self):
        with self.assertRaises(ExpressionError):
            safe_eval("'x'")

    def test_keyword_arguments(self):
        with self.assertRaises(ExpressionError):
            evaluate_on_samples("maximum(x, 0, out=x)", [1.0])

    def test_non_finite_samples(self):
        with self.assertRaises(ExpressionError):
            evaluate_on_samples("log(x)", [0.0, 1.0])


if __name__ == "__main__":
    unittest.main()
