"""Exception types raised across the specfact package."""


class SpecfactError(Exception):
    """Base class for every error raised by specfact."""


class GridError(SpecfactError):
    """Exception raised for an invalid circle grid or sample count."""


class GridMismatchError(GridError):
    """Exception raised when two sampled functions live on different grids."""


class NotRealError(SpecfactError):
    """Exception raised when a real-valued sample vector has imaginary content."""


class NotHermitianError(SpecfactError):
    """Exception raised when a matrix deviates from Hermitian beyond tolerance."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotPositiveDefiniteError(SpecfactError):
    """Exception raised when a matrix (or grid node) is not positive definite."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FactorizationError(SpecfactError):
    """Exception raised when a spectral factor cannot be computed."""


class PaleyWienerError(FactorizationError):
    """Exception raised when log det of a density is not integrable on the grid."""


class NonConvergenceError(FactorizationError):
    """Exception raised when an iteration stops before reaching its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PreconditionError(SpecfactError):
    """Exception raised when the hypotheses of an estimate are not met."""

    def __init__(self, message, condition=""):
        super().__init__(message)
        self.condition = condition


class MissingStatisticError(SpecfactError):
    """Exception raised when a bound evaluator lacks one of its inputs."""


class NuFunctionError(SpecfactError):
    """Exception raised for a nu descriptor failing monotonicity or limit checks."""


class ArcResolutionError(GridError):
    """Exception raised when a grid has too few nodes on a family's active arc."""


class QuadratureError(SpecfactError):
    """Exception raised when a quadrature rule does not settle under refinement."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class InputParseError(SpecfactError):
    """Exception raised for malformed density files, with the offending line."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
