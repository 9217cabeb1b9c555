import unittest

import numpy as np
from scipy.linalg import sqrtm

from specfact.circle import (
    CircleGrid,
    SampledMatrixFunction,
    SampledScalarFunction,
    lp_norm,
    spectral_coefficients,
)
from specfact.config import FactorizationSettings
from specfact.errors import (
    FactorizationError,
    NonConvergenceError,
    NotPositiveDefiniteError,
    NotRealError,
    PaleyWienerError,
)
from specfact.factorize import (
    SpectralFactor,
    check_paley_wiener,
    h2_diff_norm,
    log_det_gap,
    matrix_spectral_factor,
    normalize_factor_at_zero,
    require_converged,
    scalar_outer_from_modulus,
    scalar_spectral_factor,
    spectral_factor,
)
from specfact.families import random_trig_density
from specfact.matrix_calc import pointwise_log_det


def cos_density(grid):
    return SampledScalarFunction(grid, 1.25 - np.cos(grid.nodes))


class TestScalarFactor(unittest.TestCase):
    def setUp(self):
        self.grid = CircleGrid(256)

    def test_known_outer_factor(self):
        # 1.25 - cos = |1 - e^{i theta} / 2|^2
        factor = scalar_spectral_factor(cos_density(self.grid))
        expected = 1 - 0.5 * np.exp(1j * self.grid.nodes)
        np.testing.assert_allclose(factor.plus.values[:, 0, 0], expected, atol=1e-12)
        self.assertAlmostEqual(factor.at_zero[0, 0].real, 1.0, places=12)
        self.assertLess(factor.residual, 1e-12)

    def test_factor_is_analytic(self):
        factor = scalar_spectral_factor(cos_density(self.grid))
        coefficients = spectral_coefficients(factor.plus.entry(0, 0))
        negative = coefficients[: self.grid.size // 2]
        self.assertLess(np.max(np.abs(negative)), 1e-12)

    def test_rejects_bad_densities(self):
        with self.assertRaises(NotPositiveDefiniteError):
            scalar_spectral_factor(
                SampledScalarFunction(self.grid, np.cos(self.grid.nodes))
            )
        with self.assertRaises(NotRealError):
            scalar_spectral_factor(
                SampledScalarFunction(self.grid, 1 + 1j * np.ones(256))
            )

    def test_dispatch_on_one_by_one(self):
        F = SampledMatrixFunction.from_scalar(cos_density(self.grid))
        self.assertEqual(spectral_factor(F).algorithm, "outer")


class TestOuterFromModulus(unittest.TestCase):
    def setUp(self):
        self.grid = CircleGrid(256)

    def test_constant_modulus(self):
        h = scalar_outer_from_modulus(
            SampledScalarFunction(self.grid, np.full(256, 3.0))
        )
        np.testing.assert_allclose(h.values, 3.0, atol=1e-12)

    def test_outer_polynomial(self):
        expected = 1 - 0.5 * np.exp(1j * self.grid.nodes)
        h = scalar_outer_from_modulus(
            SampledScalarFunction(self.grid, np.abs(expected))
        )
        np.testing.assert_allclose(h.values, expected, atol=1e-12)

    def test_nonpositive_node(self):
        values = np.ones(256)
        values[7] = 0.0
        with self.assertRaises(NotPositiveDefiniteError) as ctx:
            scalar_outer_from_modulus(SampledScalarFunction(self.grid, values))
        self.assertEqual(ctx.exception.index, 7)


class TestWilson(unittest.TestCase):
    def test_constant_density_gives_square_root(self):
        grid = CircleGrid(64)
        matrix = np.array([[2.0, 0.5], [0.5, 1.0]])
        factor = matrix_spectral_factor(SampledMatrixFunction.constant(grid, matrix))
        self.assertTrue(factor.converged)
        np.testing.assert_allclose(factor.at_zero, sqrtm(matrix), atol=1e-10)
        np.testing.assert_allclose(factor.plus.gram().values[0], matrix, atol=1e-10)

    def test_trigonometric_density(self):
        grid = CircleGrid(1024)
        F = random_trig_density(np.random.default_rng(3), grid)
        factor = matrix_spectral_factor(F)
        self.assertTrue(factor.converged)
        self.assertEqual(factor.algorithm, "wilson")
        self.assertLess(lp_norm(F - factor.plus.gram(), 1) / lp_norm(F, 1), 1e-7)
        self.assertLess(log_det_gap(factor, pointwise_log_det(F)), 1e-6)
        np.testing.assert_allclose(factor.at_zero, factor.at_zero.conj().T, atol=1e-12)
        self.assertTrue(np.all(np.linalg.eigvalsh(factor.at_zero) > 0))

    def test_random_densities(self):
        rng = np.random.default_rng(0)
        grid = CircleGrid(1024)
        for case in range(20):
            n, degree = int(rng.integers(2, 5)), int(rng.integers(1, 9))
            F = random_trig_density(rng, grid, n=n, degree=degree)
            with self.subTest(case=case, n=n, degree=degree):
                factor = matrix_spectral_factor(F)
                self.assertTrue(factor.converged)
                residual = lp_norm(F - factor.plus.gram(), 1)
                self.assertLessEqual(residual, 1e-8 * lp_norm(F, 1))
                self.assertLess(log_det_gap(factor, pointwise_log_det(F)), 1e-6)

    def test_iteration_cap_reports_non_convergence(self):
        grid = CircleGrid(1024)
        F = random_trig_density(np.random.default_rng(3), grid)
        settings = FactorizationSettings(max_iterations=1, tolerance=1e-15)
        factor = matrix_spectral_factor(F, settings)
        self.assertFalse(factor.converged)
        with self.assertRaises(NonConvergenceError) as raised:
            require_converged(factor)
        self.assertEqual(raised.exception.iterations, 1)

    def test_rejects_indefinite_density(self):
        grid = CircleGrid(16)
        F = SampledMatrixFunction.constant(grid, [[1.0, 2.0], [2.0, 1.0]])
        with self.assertRaises(NotPositiveDefiniteError):
            matrix_spectral_factor(F)


class TestNormalization(unittest.TestCase):
    def test_polar_normalization(self):
        grid = CircleGrid(16)
        root = sqrtm(np.array([[2.0, 0.5], [0.5, 1.0]]))
        rotation = np.array([[0.0, 1.0], [1.0, 0.0]])
        rotated = SampledMatrixFunction.constant(grid, root @ rotation)
        factor = normalize_factor_at_zero(rotated)
        np.testing.assert_allclose(factor.at_zero, root, atol=1e-12)
        np.testing.assert_allclose(factor.plus.values[0], root, atol=1e-12)

    def test_singular_value_at_zero(self):
        grid = CircleGrid(16)
        with self.assertRaises(FactorizationError):
            normalize_factor_at_zero(
                SampledMatrixFunction.constant(grid, np.zeros((2, 2)))
            )

    def test_h2_distance(self):
        grid = CircleGrid(16)
        A = SampledMatrixFunction.constant(grid, np.eye(2))
        B = SampledMatrixFunction.constant(grid, 3 * np.eye(2))
        self.assertEqual(h2_diff_norm(A, A), 0.0)
        self.assertAlmostEqual(h2_diff_norm(A, B), 2.0)


class TestPaleyWiener(unittest.TestCase):
    def test_settles_for_cos_density(self):
        trace = check_paley_wiener(cos_density, CircleGrid(64), doublings=2)
        self.assertEqual([size for size, _ in trace], [64, 128, 256])
        self.assertAlmostEqual(trace[-1][1], 0.0, places=10)

    def test_log_singularity_is_integrable(self):
        def sampler(grid):
            return SampledScalarFunction(grid, np.abs(grid.nodes))

        trace = check_paley_wiener(sampler, CircleGrid(1024))
        self.assertAlmostEqual(trace[-1][1], np.log(np.pi) - 1, places=2)

    def test_fails_without_log_integrability(self):
        def sampler(grid):
            return SampledMatrixFunction(grid, np.exp(-1.0 / grid.nodes**2))

        with self.assertRaises(PaleyWienerError):
            check_paley_wiener(sampler, CircleGrid(64))


class TestSpectralFactorRecord(unittest.TestCase):
    def test_metadata(self):
        grid = CircleGrid(16)
        factor = SpectralFactor(
            plus=SampledMatrixFunction.constant(grid, np.eye(2)),
            at_zero=np.eye(2),
            residual=0.0,
        )
        self.assertEqual(factor.metadata()["algorithm"], "outer")
        self.assertEqual(factor.dim, 2)
        self.assertEqual(factor.grid, grid)


if __name__ == "__main__":
    unittest.main()
