import unittest

from specfact.selftest import SUITES, SuiteResult, run_selftests


class TestSuiteResult(unittest.TestCase):
    def test_record(self):
        suite = SuiteResult("demo", seed=0)
        suite.record(1.0, 1.0)
        suite.record(1.0, 1.0 - 1e-12)
        self.assertTrue(suite.passed)
        suite.record(2.0, 1.0, case="first")
        suite.record(3.0, 1.0, case="second")
        self.assertEqual(suite.cases, 4)
        self.assertEqual(suite.failures, 2)
        self.assertEqual(suite.first_failure["case"], "first")
        self.assertAlmostEqual(suite.worst_excess, 2.0, places=6)

    def test_strict_inequality(self):
        suite = SuiteResult("strict", seed=0)
        suite.record(1.0, 1.0, rtol=-1e-12, atol=0.0)
        self.assertFalse(suite.passed)
        suite = SuiteResult("strict", seed=0)
        suite.record(1.0, 1.1, rtol=-1e-12, atol=0.0)
        self.assertTrue(suite.passed)

    def test_non_finite_lhs_fails(self):
        suite = SuiteResult("nan", seed=0)
        suite.record(float("nan"), 1.0)
        self.assertFalse(suite.passed)
        self.assertEqual(suite.to_dict()["failures"], 1)


class TestSuites(unittest.TestCase):
    def test_all_suites_pass(self):
        results = run_selftests(seed=0)
        self.assertEqual([r.name for r in results], list(SUITES))
        for result in results:
            with self.subTest(suite=result.name):
                self.assertTrue(result.passed, result.first_failure)
                self.assertGreater(result.cases, 0)

    def test_reproducible(self):
        first = run_selftests(seed=7, names=["holder", "matrix-chain"], cases=50)
        second = run_selftests(seed=7, names=["holder", "matrix-chain"], cases=50)
        self.assertEqual(
            [r.to_dict() for r in first], [r.to_dict() for r in second]
        )

    def test_unknown_suite(self):
        with self.assertRaises(ValueError):
            run_selftests(names=["no-such-suite"])


if __name__ == "__main__":
    unittest.main()
