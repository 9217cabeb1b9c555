import os
import unittest

import numpy as np

from specfact.circle import CircleGrid, SampledMatrixFunction, SampledScalarFunction
from specfact.config import GridSettings, VerificationSettings
from specfact.errors import PreconditionError
from specfact.factorize import SpectralFactor
from specfact.families import (
    Example1Params,
    example1_pair,
    example2_pair,
    random_trig_density,
)
from specfact.orlicz import OrliczPair
from specfact.verify import (
    DensityPair,
    bound_ratio,
    pair_statistics,
    verify_pair,
    verify_scalar_pair,
)

SLOW = os.environ.get("SPECFACT_SLOW") == "1"

MATRIX_THEOREMS = (
    "thm1.3",
    "thm1.3-inf",
    "thm1.4",
    "thm1.4-inf",
    "thm1.5",
    "thm3.1",
    "thm3.2",
    "thm3.3",
)


def constant_factor(grid, matrix):
    matrix = np.asarray(matrix, dtype=complex)
    return SpectralFactor(
        plus=SampledMatrixFunction.constant(grid, matrix), at_zero=matrix, residual=0.0
    )


def mismatched_pair(grid):
    """Identical densities with deliberately different factors: lhs > rhs = 0."""
    F = SampledMatrixFunction.constant(grid, np.eye(2))
    return DensityPair(
        F=F,
        G=F,
        F_plus=constant_factor(grid, np.eye(2)),
        G_plus=constant_factor(grid, 2 * np.eye(2)),
        label="mismatched",
    )


class TestBoundRatio(unittest.TestCase):
    def test_limits(self):
        self.assertEqual(bound_ratio(0.0, 0.0), 0.0)
        self.assertEqual(bound_ratio(1.0, np.inf), 0.0)
        self.assertEqual(bound_ratio(1.0, 0.0), np.inf)
        self.assertEqual(bound_ratio(1.0, 2.0), 0.5)


class TestVerifyPair(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.grid = CircleGrid(1024)
        cls.F = random_trig_density(np.random.default_rng(5), cls.grid)

    def test_identical_pair(self):
        pair = DensityPair(F=self.F, G=self.F, label="same")
        stats = pair_statistics(pair)
        self.assertEqual(stats.d1, 0.0)
        self.assertEqual(stats.dlogdet, 0.0)
        report = verify_pair(pair, "thm1.3")
        self.assertEqual(report.lhs, 0.0)
        self.assertEqual(report.rhs, 0.0)
        self.assertFalse(report.violation)

    def test_small_perturbation_respects_every_bound(self):
        G = SampledMatrixFunction(self.grid, self.F.values + 1e-3 * np.eye(2))
        pair = DensityPair(F=self.F, G=G, label="perturbed")
        for kind in MATRIX_THEOREMS:
            with self.subTest(kind=kind):
                report = verify_pair(pair, kind)
                self.assertGreater(report.lhs, 0.0)
                self.assertLess(report.ratio, 1.0)
                self.assertFalse(report.violation)
                self.assertTrue(report.converged)

    def test_precondition(self):
        G = SampledMatrixFunction(self.grid, self.F.values + 2 * np.eye(2))
        with self.assertRaises(PreconditionError):
            verify_pair(DensityPair(F=self.F, G=G), "thm1.3")

    def test_report_records(self):
        pair = DensityPair(F=self.F, G=self.F, label="same", params={"eps": 0.1})
        report = verify_pair(pair, "thm3.3")
        row = report.to_row()
        self.assertEqual(row["eps"], 0.1)
        self.assertEqual(row["N"], 1024)
        self.assertEqual(report.to_dict()["statistics"]["n"], 2)


class TestGridDoubling(unittest.TestCase):
    def test_violation_is_confirmed_on_the_doubled_grid(self):
        sizes = []

        def rebuild(grid):
            sizes.append(grid.size)
            return mismatched_pair(grid)

        report = verify_pair(mismatched_pair(CircleGrid(16)), "thm1.3", rebuild=rebuild)
        self.assertEqual(sizes, [32])
        self.assertTrue(report.violation)
        self.assertTrue(report.confirmed)

    def test_confirmation_can_be_switched_off(self):
        report = verify_pair(
            mismatched_pair(CircleGrid(16)),
            "thm1.3",
            rebuild=mismatched_pair,
            grid_settings=GridSettings(confirm_by_doubling=False),
        )
        self.assertTrue(report.violation)
        self.assertIsNone(report.confirmed)


class TestVerifyScalarPair(unittest.TestCase):
    def setUp(self):
        grid = CircleGrid(256)
        self.f = SampledScalarFunction(grid, 1.25 - np.cos(grid.nodes))
        perturbed = self.f.real * (1 + 0.01 * np.cos(grid.nodes))
        self.g = SampledScalarFunction(grid, perturbed)

    def test_scalar_bounds_hold(self):
        for kind in ("thm1.2", "thm2.2", "thm2.3"):
            with self.subTest(kind=kind):
                report = verify_scalar_pair(self.f, self.g, kind)
                self.assertGreater(report.lhs, 0.0)
                self.assertFalse(report.violation)

    def test_thm22_with_exponential_pair(self):
        report = verify_scalar_pair(
            self.f,
            self.g,
            "thm2.2",
            VerificationSettings(p0=3.0),
            pair0=OrliczPair.exponential(2.0),
        )
        self.assertFalse(report.violation)
        self.assertGreater(report.statistics.f_psi0, 0.0)

    def test_precomputed_statistics(self):
        base = verify_scalar_pair(self.f, self.g, "thm2.3")
        report = verify_scalar_pair(
            None,
            None,
            "thm2.3",
            lhs=base.lhs,
            statistics=base.statistics,
            label="given",
        )
        self.assertEqual(report.rhs, base.rhs)
        self.assertEqual(report.grid_size, 0)

    def test_rejects_matrix_theorems(self):
        with self.assertRaises(ValueError):
            verify_scalar_pair(self.f, self.g, "thm1.3")


@unittest.skipUnless(SLOW, "set SPECFACT_SLOW=1 for the fine-eps family runs")
class TestFamilyAcceptance(unittest.TestCase):
    def check(self, build, kind, eps_values, p1=2.0):
        settings = VerificationSettings(p1=p1)
        for eps in eps_values:
            params = Example1Params(eps=eps, p1=p1)
            with self.subTest(kind=kind, eps=eps):
                report = verify_pair(
                    build(params),
                    kind,
                    settings,
                    rebuild=lambda grid, params=params: build(params, grid),
                )
                self.assertFalse(report.violation)

    def test_example1_bounds(self):
        for kind in ("thm1.3", "thm1.3-inf"):
            self.check(example1_pair, kind, (1e-2, 1e-3))

    def test_example2_bound(self):
        self.check(example2_pair, "thm1.4", (1e-2, 1e-3, 1e-4))


if __name__ == "__main__":
    unittest.main()
