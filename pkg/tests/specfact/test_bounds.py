import unittest

import numpy as np
from scipy.special import sici

from specfact.bounds import (
    NuFunction,
    PairStatistics,
    c_constant,
    evaluate_rhs,
    kolmogorov_constants,
    orlicz_reduction_discrepancy,
    projection_estimate,
    rhs_matrix_orlicz,
    rhs_matrix_power,
    rhs_scalar,
    sine_integral_pi,
    theorem12_constant,
)
from specfact.circle import CircleGrid, SampledMatrixFunction
from specfact.config import MATRIX_POWER_THEOREMS, SCALAR_THEOREMS
from specfact.errors import MissingStatisticError, NuFunctionError, PreconditionError
from specfact.orlicz import OrliczPair

CATALAN = 0.915965594177219015


def identical_statistics(**overrides):
    stats = PairStatistics(
        n=2,
        d1=0.0,
        dlogdet=0.0,
        dlogplus=0.0,
        fp0=2.0,
        f_inf=3.0,
        ellp1=1.0,
        ell_inf=2.0,
        qfp1=1.5,
        f_psi0=2.0,
        ell_psi1=1.0,
        pi_psi1=1.0,
    )
    for name, value in overrides.items():
        setattr(stats, name, value)
    return stats


class TestConstants(unittest.TestCase):
    def test_kolmogorov_constant(self):
        K, K0 = kolmogorov_constants()
        self.assertAlmostEqual(K, (np.pi**2 / 8) / CATALAN, places=10)
        self.assertAlmostEqual(K0, 0.5 * K * sici(np.pi)[0], places=10)
        self.assertLess(K0, 1.25)

    def test_sine_integral(self):
        self.assertAlmostEqual(sine_integral_pi(), sici(np.pi)[0], places=12)

    def test_c_constant(self):
        _, K0 = kolmogorov_constants()
        self.assertAlmostEqual(c_constant(2.0), 2**1.5 * np.sqrt(K0))
        with self.assertRaises(ValueError):
            c_constant(1.0)

    def test_theorem12_constant(self):
        self.assertAlmostEqual(theorem12_constant(2.0), np.sqrt(20.0))


class TestScalarBounds(unittest.TestCase):
    def test_identical_pair_gives_zero(self):
        for kind in SCALAR_THEOREMS:
            with self.subTest(kind=kind):
                self.assertEqual(rhs_scalar(kind, identical_statistics(n=1)), 0.0)

    def test_thm23(self):
        _, K0 = kolmogorov_constants()
        stats = PairStatistics(d1=0.1, dlogdet=0.2, f_inf=3.0)
        self.assertAlmostEqual(rhs_scalar("thm2.3", stats), 0.2 + 1.2 * K0)

    def test_thm22_with_power_pair(self):
        # Lambda_Phi(s) = s^{1/q} for Phi(t) = t^q / q
        _, K0 = kolmogorov_constants()
        stats = PairStatistics(d1=0.1, dlogdet=0.2, f_psi0=1.5, p0=2.0)
        expected = 0.2 + 4 * 1.5 * np.sqrt(0.5 * K0 * 0.2)
        self.assertAlmostEqual(rhs_scalar("thm2.2", stats), expected, places=9)

    def test_thm12(self):
        stats = PairStatistics(d1=0.1, dlogdet=0.25, fp0=2.0, p0=2.0)
        expected = 0.2 + np.sqrt(20.0) * 2.0 * 0.5
        self.assertAlmostEqual(rhs_scalar("thm1.2", stats), expected)

    def test_missing_statistic(self):
        with self.assertRaises(MissingStatisticError):
            rhs_scalar("thm1.2", PairStatistics(d1=0.1))

    def test_negative_statistic(self):
        with self.assertRaises(ValueError):
            rhs_scalar("thm2.3", PairStatistics(d1=-0.1, dlogdet=0.0, f_inf=1.0))


class TestMatrixPowerBounds(unittest.TestCase):
    def test_identical_pair_gives_zero(self):
        for kind in MATRIX_POWER_THEOREMS:
            with self.subTest(kind=kind):
                self.assertEqual(rhs_matrix_power(kind, identical_statistics()), 0.0)

    def test_preconditions(self):
        with self.assertRaises(PreconditionError) as raised:
            rhs_matrix_power("thm1.3", identical_statistics(d1=2.0))
        self.assertIn("<= 1", raised.exception.condition)
        with self.assertRaises(PreconditionError):
            rhs_matrix_power("thm1.4-inf", identical_statistics(d1=0.1))

    def test_thm13_grows_with_distance(self):
        values = [
            rhs_matrix_power(
                "thm1.3", identical_statistics(d1=d, dlogdet=1e-3, dlogplus=1e-3)
            )
            for d in np.geomspace(1e-8, 0.5, 12)
        ]
        self.assertTrue(np.all(np.diff(values) > 0))

    def test_thm15(self):
        stats = identical_statistics(d1=0.01, dlogdet=0.02, ell_inf=1.0)
        expected = 3.0 * (2 * np.e * 0.01 + 0.02)
        self.assertAlmostEqual(rhs_matrix_power("thm1.5", stats), expected)


class TestNuFunction(unittest.TestCase):
    def test_builtin_kinds_validate(self):
        NuFunction.power(0.5).validate()
        NuFunction.root(2.0).validate()
        self.assertAlmostEqual(NuFunction.root(3.0)(1e-4), 0.1)
        self.assertEqual(NuFunction.power(0.5)(4.0), 1.0)

    def test_bad_parameters(self):
        with self.assertRaises(NuFunctionError):
            NuFunction.power(1.5).validate()
        with self.assertRaises(NuFunctionError):
            NuFunction.root(1.0).validate()

    def test_tabulated(self):
        nu = NuFunction.tabulated([1e-12, 1.0], [1e-6, 1.0]).validate()
        self.assertAlmostEqual(nu(1e-4), 1e-2)
        self.assertAlmostEqual(nu(1e-14), 1e-7)
        with self.assertRaises(NuFunctionError):
            NuFunction.tabulated([1.0, 1e-3], [1.0, 0.5]).validate()
        with self.assertRaises(NuFunctionError):
            # t / nu(t) = 1 / t grows toward 0
            NuFunction.tabulated([1e-12, 1.0], [1e-24, 1.0]).validate()

    def test_descriptors(self):
        nu = NuFunction.root(2.0)
        self.assertEqual(NuFunction.from_descriptor(nu.descriptor()), nu)
        with self.assertRaises(NuFunctionError):
            NuFunction.from_descriptor({"kind": "exp"})


class TestOrliczBounds(unittest.TestCase):
    def test_identical_pair_gives_zero(self):
        stats = identical_statistics()
        pair0, pair1 = OrliczPair.power(2.0), OrliczPair.power(2.0)
        nu = NuFunction.power(0.5)
        for kind in ("thm3.1", "thm3.2", "thm3.3"):
            with self.subTest(kind=kind):
                rhs = rhs_matrix_orlicz(kind, stats, pair0, pair1, nu)
                self.assertEqual(rhs, 0.0)

    def test_reduces_to_thm13(self):
        stats = identical_statistics(d1=1e-3, dlogdet=1e-2, dlogplus=1e-2, fp0=2.0)
        stats.f_psi0 = np.sqrt(2.0) * stats.fp0
        stats.ell_psi1 = stats.ellp1
        power = rhs_matrix_power("thm1.3", stats)
        orlicz = rhs_matrix_orlicz(
            "thm3.1",
            stats,
            OrliczPair.power(2.0),
            OrliczPair.power(2.0),
            NuFunction.power(0.5),
        )
        self.assertAlmostEqual(orlicz / power, 1.0, places=9)

    def test_needs_second_pair(self):
        with self.assertRaises(MissingStatisticError):
            rhs_matrix_orlicz("thm3.1", identical_statistics(), OrliczPair.power(2.0))

    def test_dispatch(self):
        self.assertEqual(evaluate_rhs("thm2.3", identical_statistics(n=1)), 0.0)
        with self.assertRaises(ValueError):
            evaluate_rhs("thm9.9", identical_statistics())


class TestSupplements(unittest.TestCase):
    def test_reduction_discrepancy(self):
        ell = -np.linspace(0.1, 3.0, 64)
        report = orlicz_reduction_discrepancy(ell, 3.0)
        self.assertAlmostEqual(report["ratio"], 3.0 ** (-1 / 3), places=8)

    def test_projection_estimate_constant_pair(self):
        grid = CircleGrid(16)
        root = np.sqrt(2.0) * np.eye(2)
        Fp = SampledMatrixFunction.constant(grid, root)
        lhs, rhs = projection_estimate(Fp, Fp, root, root, d1=0.0, eta=2.0, bound=2.0)
        self.assertEqual((lhs, rhs), (0.0, 0.0))
        with self.assertRaises(ValueError):
            projection_estimate(Fp, Fp, root, root, d1=0.0, eta=3.0, bound=2.0)


if __name__ == "__main__":
    unittest.main()
