"""
Spectral factorization F = F+ (F+)* on the circle grid.

Scalar densities use the explicit outer-function formula; matrix densities
use a damped Wilson (Newton-type) iteration on a truncated analytic factor.
Every factor is normalized so that its value at the origin is Hermitian
positive definite.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sp_fft
from scipy.linalg import polar

from specfact.circle import (
    CircleGrid,
    SampledMatrixFunction,
    SampledScalarFunction,
    conjugate_function,
    lp_norm,
)
from specfact.config import FactorizationSettings
from specfact.errors import (
    FactorizationError,
    NonConvergenceError,
    NotPositiveDefiniteError,
    NotRealError,
    PaleyWienerError,
)
from specfact.matrix_calc import hermitian_part, log_det

logger = logging.getLogger(__name__)


@dataclass
class SpectralFactor:
    """Boundary values of F+, its value at 0 and residual diagnostics."""

    plus: SampledMatrixFunction
    at_zero: np.ndarray
    residual: float
    iterations: int = 0
    converged: bool = True
    algorithm: str = "outer"
    truncation_degree: Optional[int] = None
    residual_history: list = field(default_factory=list)

    @property
    def grid(self):
        return self.plus.grid

    @property
    def dim(self):
        return self.plus.dim

    def metadata(self):
        return {
            "at_zero": self.at_zero,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "algorithm": self.algorithm,
            "truncation_degree": self.truncation_degree,
        }


def _real_positive(f, what):
    if not f.is_real():
        raise NotRealError(f"{what} must be real-valued.")
    values = f.real
    bad = ~(values > 0)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise NotPositiveDefiniteError(
            f"{what} is not positive at node {index} (value {values[index]!r}).",
            index=index,
        )
    return values


def outer_from_log_modulus(grid, log_modulus):
    """
    Outer function with log|h| = log_modulus, for moduli too small to store.

    Returns:
        SampledScalarFunction exp(log_modulus + i * conj(log_modulus))
    """
    log_modulus = np.asarray(log_modulus, dtype=float)
    if not np.all(np.isfinite(log_modulus)):
        raise PaleyWienerError("log of the modulus is not finite on the grid.")
    phase = conjugate_function(SampledScalarFunction(grid, log_modulus)).real
    return SampledScalarFunction(grid, np.exp(log_modulus + 1j * phase))


def scalar_outer_from_modulus(absf):
    """
    Outer function h with |h| = absf on the circle and h(0) > 0.

    Args:
        absf: SampledScalarFunction, real and strictly positive

    Returns:
        SampledScalarFunction with the boundary values
        exp(log absf + i * conj(log absf))
    """
    return outer_from_log_modulus(absf.grid, np.log(_real_positive(absf, "modulus")))


def scalar_spectral_factor(f):
    """
    Spectral factor of a scalar density: f+ = outer(sqrt f) with
    f+(0) = exp(mean(log f) / 2).
    """
    values = _real_positive(f, "density")
    plus = scalar_outer_from_modulus(SampledScalarFunction(f.grid, np.sqrt(values)))
    at_zero = np.exp(0.5 * np.mean(np.log(values)))
    gap = values - np.abs(plus.values) ** 2
    residual = lp_norm(SampledScalarFunction(f.grid, gap), 1)
    return SpectralFactor(
        plus=SampledMatrixFunction.from_scalar(plus),
        at_zero=np.array([[at_zero]], dtype=complex),
        residual=residual,
    )


def value_at_zero(plus):
    """F+(0) of an analytic factor: the zeroth Fourier coefficient (the mean)."""
    return np.mean(plus.values, axis=0)


def normalize_factor_at_zero(A_plus, at_zero=None, density=None):
    """
    Right-multiply a factor by the unitary that makes its value at 0 Hermitian
    positive definite.

    Args:
        A_plus: SampledMatrixFunction, boundary values of an analytic factor
        at_zero: its value at 0 (defaults to the mean of the boundary values)
        density: optional density the factor reproduces, for the residual

    Returns:
        SpectralFactor whose at_zero is P from the polar decomposition P U

    Raises:
        FactorizationError: if at_zero is singular
    """
    at_zero = value_at_zero(A_plus) if at_zero is None else np.asarray(at_zero)
    if np.linalg.matrix_rank(at_zero) < at_zero.shape[0]:
        raise FactorizationError("Factor value at 0 is singular.")
    unitary, positive = polar(at_zero, side="left")
    plus = SampledMatrixFunction(A_plus.grid, A_plus.values @ np.conj(unitary.T))
    residual = np.nan if density is None else lp_norm(density - plus.gram(), 1)
    return SpectralFactor(
        plus=plus,
        at_zero=0.5 * (positive + np.conj(positive.T)),
        residual=residual,
        algorithm="normalized",
    )


class WilsonFactorizer:
    """
    Damped Wilson iteration psi <- psi [psi^{-1} F psi^{-*} + I]_+ .

    [.]_+ keeps the positive Fourier modes up to the truncation degree and
    half of the zeroth mode.  A step is accepted only if the coefficient
    residual of F - psi psi* decreases; otherwise it is halved.
    """

    def __init__(
        self,
        max_iterations=200,
        tolerance=1e-10,
        truncation_degree=None,
        max_halvings=30,
    ):
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.truncation_degree = truncation_degree
        self.max_halvings = max_halvings

    @classmethod
    def from_settings(cls, settings: FactorizationSettings):
        return cls(
            max_iterations=settings.max_iterations,
            tolerance=settings.tolerance,
            truncation_degree=settings.truncation_degree,
            max_halvings=settings.max_halvings,
        )

    def degree_for(self, grid: CircleGrid):
        degree = self.truncation_degree or grid.size // 4
        return min(degree, grid.size // 2 - 1)

    def _masks(self, grid):
        k = grid.frequencies
        degree = self.degree_for(grid)
        plus_mask = np.where((k > 0) & (k <= degree), 1.0, 0.0)
        plus_mask[k == 0] = 0.5
        keep_mask = np.where((k >= 0) & (k <= degree), 1.0, 0.0)
        return plus_mask, keep_mask

    @staticmethod
    def _apply_mask(values, mask):
        spectrum = sp_fft.fft(values, axis=0)
        return sp_fft.ifft(mask[:, None, None] * spectrum, axis=0)

    @staticmethod
    def _coefficient_residual(S, psi):
        gap = S - psi @ np.conj(psi.swapaxes(1, 2))
        return float(np.max(np.abs(sp_fft.fft(gap, axis=0))) / len(S))

    def factor(self, F):
        """
        Factor a pointwise Hermitian positive definite density.

        Returns:
            SpectralFactor with converged=False when the tolerance was not
            reached; the caller decides whether that is fatal.
        """
        S = hermitian_part(F.values)
        smallest = np.linalg.eigvalsh(S)[:, 0]
        if np.any(smallest <= 0):
            index = int(np.argmax(smallest <= 0))
            raise NotPositiveDefiniteError(
                f"Density is not positive definite at node {index}.", index=index
            )

        plus_mask, keep_mask = self._masks(F.grid)
        identity = np.eye(F.dim)
        psi = np.broadcast_to(np.linalg.cholesky(np.mean(S, axis=0)), S.shape).copy()
        residual = self._coefficient_residual(S, psi)
        history = [residual]
        converged = residual <= self.tolerance
        iterations = 0

        while not converged and iterations < self.max_iterations:
            iterations += 1
            left = np.linalg.solve(psi, S)
            g = np.linalg.solve(psi, np.conj(left.swapaxes(1, 2))) + identity
            target = self._apply_mask(psi @ self._apply_mask(g, plus_mask), keep_mask)

            step = 1.0
            for _ in range(self.max_halvings + 1):
                candidate = psi + step * (target - psi)
                candidate_residual = self._coefficient_residual(S, candidate)
                if candidate_residual < residual:
                    break
                step /= 2
            else:
                logger.warning(
                    "Wilson iteration stalled at residual %.3e after %d iterations",
                    residual,
                    iterations,
                )
                break

            psi, residual = candidate, candidate_residual
            history.append(residual)
            converged = residual <= self.tolerance
            logger.debug(
                "Wilson iteration %d: residual %.3e (step %g)",
                iterations,
                residual,
                step,
            )

        if not converged:
            logger.warning(
                "Wilson iteration did not reach %.1e: residual %.3e after %d steps",
                self.tolerance,
                residual,
                iterations,
            )

        normalized = normalize_factor_at_zero(
            SampledMatrixFunction(F.grid, psi), density=F
        )
        logger.info(
            "Wilson factorization n=%d N=%d: %d iterations, L1 residual %.3e",
            F.dim,
            F.grid.size,
            iterations,
            normalized.residual,
        )
        normalized.iterations = iterations
        normalized.converged = converged
        normalized.algorithm = "wilson"
        normalized.truncation_degree = self.degree_for(F.grid)
        normalized.residual_history = history
        return normalized


def matrix_spectral_factor(F, settings=None):
    """Spectral factor of a matrix density by the Wilson iteration."""
    settings = settings or FactorizationSettings()
    return WilsonFactorizer.from_settings(settings).factor(F)


def require_converged(factor):
    if not factor.converged:
        raise NonConvergenceError(
            f"Factorization did not converge: residual {factor.residual:.3e} "
            f"after {factor.iterations} iterations.",
            residual=factor.residual,
            iterations=factor.iterations,
        )
    return factor


def spectral_factor(F, settings=None):
    """Dispatch to the scalar formula for 1 x 1 inputs, Wilson otherwise."""
    if isinstance(F, SampledScalarFunction):
        return scalar_spectral_factor(F)
    if F.dim == 1:
        return scalar_spectral_factor(F.entry(0, 0))
    return matrix_spectral_factor(F, settings)


def h2_diff_norm(Fp, Gp):
    """sqrt(mean ||Fp - Gp||^2), the H_2 distance of boundary values."""
    return lp_norm(Fp - Gp, 2)


def log_det_gap(factor, log_det_values):
    """|log det F+(0) - mean(log det F) / 2|, zero for an outer factor."""
    return abs(
        float(log_det(factor.at_zero)) - 0.5 * float(np.mean(log_det_values))
    )


def mean_log_det(density):
    if isinstance(density, SampledScalarFunction):
        return float(np.mean(np.log(_real_positive(density, "density"))))
    return float(np.mean(log_det(density.values)))


def check_paley_wiener(sampler, grid, doublings=3, rtol=1e-2):
    """
    Confirm that mean(log det F) settles under grid doubling.

    Args:
        sampler: callable taking a CircleGrid and returning the density
        grid: starting grid
        doublings: number of doublings
        rtol: relative change allowed between the last two grids

    Returns:
        list of (N, mean log det) pairs

    Raises:
        PaleyWienerError: if a value is not finite or the trace does not settle
    """
    trace = []
    for _ in range(doublings + 1):
        try:
            value = mean_log_det(sampler(grid))
        except NotPositiveDefiniteError as e:
            raise PaleyWienerError(
                f"log det is not defined on N={grid.size}: {e}"
            ) from e
        trace.append((grid.size, value))
        if not np.isfinite(value):
            raise PaleyWienerError(f"mean(log det) is not finite on N={grid.size}.")
        grid = grid.doubled()
    (_, previous), (_, last) = trace[-2], trace[-1]
    if abs(last - previous) > rtol * max(1.0, abs(last)):
        raise PaleyWienerError(
            f"mean(log det) does not settle under doubling: {trace}"
        )
    logger.debug("Paley-Wiener trace: %s", trace)
    return trace
