import unittest

import numpy as np

from specfact.circle import CircleGrid, SampledMatrixFunction
from specfact.errors import NotHermitianError, NotPositiveDefiniteError
from specfact.matrix_calc import (
    HermitianSpectrum,
    ell_and_Q,
    hermitian_part,
    log_det,
    log_plus,
    matrix_vee,
    normalize_unit_ball,
    operator_norm,
    pointwise_min_eigenvalue,
    spd_log,
)


class TestHermitian(unittest.TestCase):
    def test_operator_norm(self):
        self.assertAlmostEqual(operator_norm(np.diag([3.0, -5.0])), 5.0)
        stack = np.array([np.eye(2), 2 * np.eye(2)])
        np.testing.assert_allclose(operator_norm(stack), [1.0, 2.0])

    def test_hermitian_part_names_the_node(self):
        stack = np.array([np.eye(2), [[1.0, 1.0], [0.0, 1.0]], np.eye(2)])
        with self.assertRaises(NotHermitianError) as raised:
            hermitian_part(stack)
        self.assertEqual(raised.exception.index, 1)

    def test_hermitian_part_symmetrizes_roundoff(self):
        A = np.array([[1.0, 0.5 + 1e-13], [0.5, 2.0]])
        np.testing.assert_allclose(hermitian_part(A), hermitian_part(A).conj().T)

    def test_spectrum_reconstructs(self):
        A = np.array([[2.0, 1j], [-1j, 3.0]])
        np.testing.assert_allclose(HermitianSpectrum.of(A).reconstruct(), A, atol=1e-14)


class TestFunctionalCalculus(unittest.TestCase):
    def test_matrix_vee_floors_eigenvalues(self):
        np.testing.assert_allclose(
            matrix_vee(np.diag([0.1, 2.0]), 1.0), np.diag([1.0, 2.0])
        )
        with self.assertRaises(ValueError):
            matrix_vee(np.eye(2), 0.0)

    def test_spd_log(self):
        np.testing.assert_allclose(
            spd_log(np.diag([np.e, 1.0])), np.diag([1.0, 0.0]), atol=1e-14
        )
        with self.assertRaises(NotPositiveDefiniteError):
            spd_log(np.diag([1.0, 0.0]))

    def test_log_det(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        self.assertAlmostEqual(float(log_det(A)), np.log(1.75))

    def test_log_plus(self):
        np.testing.assert_allclose(log_plus(np.array([0.5, np.e])), [0.0, 1.0])


class TestConditioningFields(unittest.TestCase):
    def setUp(self):
        self.grid = CircleGrid(16)

    def test_ell_and_Q_of_a_constant(self):
        F = SampledMatrixFunction.constant(self.grid, np.diag([2.0, 0.5]))
        ell, Q = ell_and_Q(F)
        np.testing.assert_allclose(ell.real, -2 * np.log(2.0))
        np.testing.assert_allclose(Q.real, 4.0)

    def test_ell_uses_given_log_det(self):
        F = SampledMatrixFunction.constant(self.grid, np.eye(2))
        ell, _ = ell_and_Q(F, log_det_values=np.full(16, -3.0))
        np.testing.assert_allclose(ell.real, -3.0)

    def test_normalize_unit_ball(self):
        F = SampledMatrixFunction.constant(self.grid, np.diag([4.0, 1.0]))
        M, F1 = normalize_unit_ball(F)
        np.testing.assert_allclose(M.real, 4.0)
        np.testing.assert_allclose(F1.values[0], np.diag([1.0, 0.25]))

        small = SampledMatrixFunction.constant(self.grid, 0.5 * np.eye(2))
        M, F1 = normalize_unit_ball(small)
        np.testing.assert_allclose(M.real, 1.0)
        np.testing.assert_allclose(F1.values, small.values)

    def test_min_eigenvalue(self):
        F = SampledMatrixFunction.constant(self.grid, [[2.0, 0.5], [0.5, 1.0]])
        expected = 1.5 - np.sqrt(0.5)
        np.testing.assert_allclose(pointwise_min_eigenvalue(F), expected)


if __name__ == "__main__":
    unittest.main()
