"""Exception types raised across the package."""


class RuqlpError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RuqlpError, ValueError):
    """Input matrix or argument failed validation."""


class ConfigurationError(ValidationError):
    """Sketch parameters are inconsistent with the matrix shape."""


class DomainError(ValidationError):
    """A formula is undefined for the requested parameters."""


class ConvergenceError(RuqlpError, ArithmeticError):
    """An iterative kernel hit its iteration cap."""

    def __init__(self, message, iterations):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class EmptyBasisError(RuqlpError, ArithmeticError):
    """Orthonormal basis requested for a numerically zero matrix."""


class DegenerateSketchError(RuqlpError, ArithmeticError):
    """The sampled subspace lost rank during power iteration."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} at half-step {iteration}")
        self.iteration = iteration


class RankDeficientSketchError(RuqlpError, ArithmeticError):
    """The projected sketch block is numerically rank deficient."""


class MatrixMarketError(RuqlpError, ValueError):
    """Malformed Matrix Market input."""

    def __init__(self, message, lineno=None):
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message}")
        self.lineno = lineno
