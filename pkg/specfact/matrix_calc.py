"""
Pointwise functional calculus for Hermitian matrices and matrix functions.
"""

import logging
from dataclasses import dataclass

import numpy as np

from specfact.circle import SampledMatrixFunction, SampledScalarFunction
from specfact.errors import NotHermitianError, NotPositiveDefiniteError

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-10
SINGULAR_TOLERANCE = 1e-14


def operator_norm(M):
    """Largest singular value of a matrix (or of each matrix in a stack)."""
    M = np.asarray(M)
    if M.ndim == 2:
        return float(np.linalg.norm(M, ord=2))
    return np.linalg.norm(M, ord=2, axis=(-2, -1))


def hermitian_part(A, index=None):
    """
    Symmetrize a (stack of) nearly Hermitian matrices.

    Raises:
        NotHermitianError: if ||A - A*|| exceeds 1e-10 * max(1, ||A||), naming
            the first offending node when a stack is given
    """
    A = np.asarray(A, dtype=complex)
    adjoint = np.conj(np.swapaxes(A, -1, -2))
    skew = A - adjoint
    # i * skew is Hermitian, so eigvalsh yields its operator norm
    defect = np.max(np.abs(np.linalg.eigvalsh(1j * skew)), axis=-1)
    scale = np.maximum(1.0, operator_norm(A))
    bad = np.atleast_1d(defect > HERMITIAN_TOLERANCE * scale)
    if np.any(bad):
        where = int(np.argmax(bad)) if A.ndim == 3 else index
        raise NotHermitianError(
            f"Matrix deviates from Hermitian by {float(np.max(defect)):.3e}"
            + ("" if where is None else f" at node {where}")
            + ".",
            index=where,
        )
    return 0.5 * (A + adjoint)


@dataclass(frozen=True, eq=False)
class HermitianSpectrum:
    """Ascending eigenvalues and unitary eigenvectors with A = U diag(w) U*."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def of(cls, A):
        eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(A))
        return cls(eigenvalues, eigenvectors)

    def apply(self, func):
        """U diag(func(w)) U*, the usual functional calculus."""
        U = self.eigenvectors
        values = func(self.eigenvalues)
        return (U * values[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))

    def reconstruct(self):
        return self.apply(lambda w: w)


def matrix_vee(A, eta):
    """
    Minimal Hermitian upper bound of A and eta * I.

    Args:
        A: Hermitian n x n matrix (or a stack of them)
        eta: positive real

    Returns:
        U diag(max(w_i, eta)) U*
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}.")
    return HermitianSpectrum.of(A).apply(lambda w: np.maximum(w, eta))


def spd_log(A):
    """
    Matrix logarithm of a Hermitian positive definite matrix.

    Raises:
        NotPositiveDefiniteError: if an eigenvalue is <= 1e-14 * ||A||
    """
    spectrum = HermitianSpectrum.of(A)
    _check_positive(spectrum.eigenvalues)
    return spectrum.apply(np.log)


def _check_positive(eigenvalues):
    scale = np.max(np.abs(eigenvalues), axis=-1)
    smallest = eigenvalues[..., 0]
    bad = np.atleast_1d(smallest <= SINGULAR_TOLERANCE * scale)
    if np.any(bad):
        where = int(np.argmax(bad)) if np.ndim(smallest) else None
        raise NotPositiveDefiniteError(
            f"Smallest eigenvalue {float(np.atleast_1d(smallest)[bad][0]):.3e} is not"
            " positive" + ("" if where is None else f" at node {where}") + ".",
            index=where,
        )


def log_det(A):
    """log det of Hermitian positive definite matrices as a sum of log eigenvalues."""
    eigenvalues = np.linalg.eigvalsh(hermitian_part(A))
    _check_positive(eigenvalues)
    return np.sum(np.log(eigenvalues), axis=-1)


def log_plus(x):
    return np.log(np.maximum(x, 1.0))


def pointwise_log_det(F):
    """log det F(theta_j) at every node, as a real sample vector."""
    return log_det(F.values)


def pointwise_min_eigenvalue(F):
    return np.linalg.eigvalsh(hermitian_part(F.values))[:, 0]


def ell_and_Q(F, log_det_values=None):
    """
    The conditioning fields ell_F = log det F - n log+ ||F|| and Q_F = exp(-ell_F).

    Args:
        F: pointwise Hermitian positive definite SampledMatrixFunction
        log_det_values: optional exact log det F samples, used instead of the
            eigenvalue sum when the caller knows them in closed form

    Returns:
        (ell, Q) as real-valued SampledScalarFunctions
    """
    if log_det_values is None:
        log_det_values = pointwise_log_det(F)
    log_det_values = np.asarray(log_det_values, dtype=float)
    norms = F.pointwise_norms()
    ell = log_det_values - F.dim * log_plus(norms)
    # ell <= 0 holds exactly; clip roundoff above zero
    ell = np.minimum(ell, 0.0)
    with np.errstate(over="ignore"):
        Q = np.exp(-ell)
    return SampledScalarFunction(F.grid, ell), SampledScalarFunction(F.grid, Q)


def normalize_unit_ball(F):
    """
    Split F into M_F = max(1, ||F||) and F_1 = F / M_F with 0 <= F_1 <= I.

    Returns:
        (M_F, F_1)
    """
    hermitian = hermitian_part(F.values)
    M = np.maximum(1.0, operator_norm(hermitian))
    return (
        SampledScalarFunction(F.grid, M),
        SampledMatrixFunction(F.grid, hermitian / M[:, None, None]),
    )
