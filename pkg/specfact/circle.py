"""
Functions on the unit circle sampled on a uniform midpoint grid.

The grid has nodes theta_j = -pi + (j + 1/2) * 2*pi/N, so neither 0 nor +-pi is
ever a node.  Spectral coefficients are indexed k = -N/2 .. N/2 - 1 and
approximate (1/2pi) * integral of f(e^{i theta}) e^{-ik theta}.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from specfact.errors import GridError, GridMismatchError, NotRealError

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 2**16
MIN_GRID_SIZE = 16
REAL_TOLERANCE = 1e-10
HERMITIAN_TOLERANCE = 1e-10


@dataclass(frozen=True)
class CircleGrid:
    """Uniform midpoint grid with ``size`` nodes (a power of two, at least 16)."""

    size: int

    def __post_init__(self):
        size = int(self.size)
        if size < MIN_GRID_SIZE or size & (size - 1):
            raise GridError(
                f"Grid size must be a power of two >= {MIN_GRID_SIZE}, got {self.size}."
            )
        object.__setattr__(self, "size", size)

    @classmethod
    def default(cls):
        return cls(DEFAULT_GRID_SIZE)

    @classmethod
    def at_least(cls, count):
        """Smallest admissible grid with at least ``count`` nodes."""
        count = max(int(np.ceil(count)), MIN_GRID_SIZE)
        return cls(1 << (count - 1).bit_length())

    @property
    def step(self):
        return 2 * np.pi / self.size

    @property
    def nodes(self):
        return -np.pi + (np.arange(self.size) + 0.5) * self.step

    @property
    def frequencies(self):
        """Integer frequencies in FFT order (0, 1, ..., N/2-1, -N/2, ..., -1)."""
        return np.fft.fftfreq(self.size, d=1.0 / self.size).astype(int)

    def doubled(self):
        return CircleGrid(2 * self.size)

    def count_nodes_in(self, left, right):
        """Number of nodes in the closed arc [left, right]."""
        nodes = self.nodes
        return int(np.count_nonzero((nodes >= left) & (nodes <= right)))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(
            f"Grids differ: {a.grid.size} nodes versus {b.grid.size} nodes."
        )


@dataclass(frozen=True, eq=False)
class SampledScalarFunction:
    """Complex boundary values of a scalar function, one per grid node."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.size,):
            raise GridError(
                f"Expected {self.grid.size} samples, got shape {values.shape}."
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid, func):
        return cls(grid, func(grid.nodes))

    @property
    def real(self):
        return self.values.real

    @property
    def imag(self):
        return self.values.imag

    @property
    def modulus(self):
        return np.abs(self.values)

    def is_real(self, tol=REAL_TOLERANCE):
        scale = max(1.0, float(np.max(np.abs(self.values), initial=0.0)))
        return float(np.max(np.abs(self.values.imag), initial=0.0)) <= tol * scale

    def with_values(self, values):
        return SampledScalarFunction(self.grid, values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SampledScalarFunction(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class SampledMatrixFunction:
    """An n x n complex matrix per grid node, stored as an (N, n, n) array."""

    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim == 1:
            values = values.reshape(-1, 1, 1)
        if (
            values.ndim != 3
            or values.shape[0] != self.grid.size
            or values.shape[1] != values.shape[2]
        ):
            raise GridError(
                f"Expected shape ({self.grid.size}, n, n), got {values.shape}."
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        return cls(grid, np.broadcast_to(matrix, (grid.size,) + matrix.shape).copy())

    @classmethod
    def from_scalar(cls, f):
        return cls(f.grid, f.values.reshape(-1, 1, 1))

    @classmethod
    def from_entries(cls, grid, rows):
        """Build from nested lists of sample vectors or SampledScalarFunctions."""
        n = len(rows)
        values = np.zeros((grid.size, n, n), dtype=complex)
        for i, row in enumerate(rows):
            for j, entry in enumerate(row):
                if isinstance(entry, SampledScalarFunction):
                    entry = entry.values
                values[:, i, j] = entry
        return cls(grid, values)

    @property
    def dim(self):
        return self.values.shape[1]

    def entry(self, i, j):
        return SampledScalarFunction(self.grid, self.values[:, i, j])

    def adjoint(self):
        return SampledMatrixFunction(self.grid, np.conj(self.values.swapaxes(1, 2)))

    def gram(self):
        """Pointwise A A* (the density generated by a factor A)."""
        return SampledMatrixFunction(
            self.grid, self.values @ np.conj(self.values.swapaxes(1, 2))
        )

    def __matmul__(self, other):
        _check_same_grid(self, other)
        return SampledMatrixFunction(self.grid, self.values @ other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        if self.dim != other.dim:
            raise GridMismatchError(
                f"Dimensions differ: {self.dim} versus {other.dim}."
            )
        return SampledMatrixFunction(self.grid, self.values - other.values)

    def pointwise_norms(self):
        """Operator norm (largest singular value) at every node."""
        if self.dim == 1:
            return np.abs(self.values[:, 0, 0])
        return np.linalg.norm(self.values, ord=2, axis=(1, 2))

    @cached_property
    def hermitian_defects(self):
        """Operator norm of A - A* at every node."""
        skew = self.values - np.conj(self.values.swapaxes(1, 2))
        # i * skew is Hermitian, so its eigenvalues give the operator norm
        return np.max(np.abs(np.linalg.eigvalsh(1j * skew)), axis=1)

    @cached_property
    def is_hermitian(self):
        scale = np.maximum(1.0, self.pointwise_norms())
        return bool(np.all(self.hermitian_defects <= HERMITIAN_TOLERANCE * scale))

    @cached_property
    def is_positive_definite(self):
        if not self.is_hermitian:
            return False
        hermitian = 0.5 * (self.values + np.conj(self.values.swapaxes(1, 2)))
        return bool(np.all(np.linalg.eigvalsh(hermitian)[:, 0] > 0))


def spectral_coefficients(f):
    """
    Fourier coefficients of sampled boundary values.

    Args:
        f: SampledScalarFunction

    Returns:
        complex array of length N, entry m holding the coefficient of
        frequency k = m - N/2
    """
    grid = f.grid
    raw = sp_fft.fft(f.values) / grid.size
    # shift from the node at -pi + h/2 to the origin of the angle
    raw = raw * np.exp(-1j * grid.frequencies * grid.nodes[0])
    return sp_fft.fftshift(raw)


def from_coefficients(grid, coefficients):
    """Inverse of spectral_coefficients."""
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.shape != (grid.size,):
        raise GridError(f"Expected {grid.size} coefficients, got {coefficients.shape}.")
    raw = sp_fft.ifftshift(coefficients) * np.exp(1j * grid.frequencies * grid.nodes[0])
    return SampledScalarFunction(grid, sp_fft.ifft(raw) * grid.size)


def conjugate_multiplier(grid):
    """-i sign(k) in FFT order, zero at k = 0 and at the Nyquist frequency."""
    k = grid.frequencies
    multiplier = -1j * np.sign(k)
    multiplier[k == -grid.size // 2] = 0
    return multiplier


def conjugate_function(u):
    """
    Harmonic conjugate of a real function, normalized to vanish at the origin.

    The Nyquist mode has no conjugate on a finite grid and is dropped.
    """
    if not u.is_real():
        raise NotRealError("conjugate_function expects real-valued samples.")
    spectrum = sp_fft.fft(u.real)
    values = sp_fft.ifft(conjugate_multiplier(u.grid) * spectrum)
    return SampledScalarFunction(u.grid, values.real)


def mean(f):
    """Normalized integral (1/2pi) * integral of f, by the rectangle rule."""
    values = f.values if hasattr(f, "values") else np.asarray(f)
    return complex(np.mean(values, axis=0)) if np.ndim(values) == 1 else np.mean(
        values, axis=0
    )


def power_mean(values, p):
    """((1/N) sum |v|^p)^(1/p), or max |v| for p = inf, scaled against overflow."""
    if p != np.inf and p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}.")
    values = np.abs(np.asarray(values, dtype=float))
    top = float(np.max(values, initial=0.0))
    if p == np.inf or top == 0.0 or not np.isfinite(top):
        return top
    return top * float(np.mean((values / top) ** p)) ** (1.0 / p)


def pointwise_norms(F):
    if isinstance(F, SampledScalarFunction):
        return F.modulus
    return F.pointwise_norms()


def lp_norm(F, p):
    """
    L_p norm of a sampled scalar or matrix function.

    Args:
        F: SampledScalarFunction or SampledMatrixFunction
        p: real >= 1 or numpy.inf

    Returns:
        ((1/N) sum ||F(theta_j)||^p)^(1/p) with the operator norm pointwise
    """
    return power_mean(pointwise_norms(F), p)


def l1_distance(F, G):
    if isinstance(F, SampledMatrixFunction) != isinstance(G, SampledMatrixFunction):
        raise GridMismatchError("Cannot compare a scalar and a matrix function.")
    return lp_norm(F - G, 1)
