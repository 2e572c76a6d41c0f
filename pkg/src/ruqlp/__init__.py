"""Randomized unpivoted QLP factorization with bound checks and benchmarks."""
from ._backend import BACKEND
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateSketchError,
    DomainError,
    EmptyBasisError,
    MatrixMarketError,
    RankDeficientSketchError,
    RuqlpError,
    ValidationError,
)
from .matcore import (
    QrFactors,
    SvdFactors,
    matrix_norm,
    orth,
    qr_pivoted,
    qr_unpivoted,
    svd,
)
from .randfact import (
    QlpFactors,
    SketchConfig,
    UtvFactors,
    pi_orth,
    pivoted_qlp,
    randomized_baseline,
    ru_qlp,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "ConvergenceError",
    "DegenerateSketchError",
    "DomainError",
    "EmptyBasisError",
    "MatrixMarketError",
    "QlpFactors",
    "QrFactors",
    "RankDeficientSketchError",
    "RuqlpError",
    "SketchConfig",
    "SvdFactors",
    "UtvFactors",
    "ValidationError",
    "matrix_norm",
    "orth",
    "pi_orth",
    "pivoted_qlp",
    "qr_pivoted",
    "qr_unpivoted",
    "randomized_baseline",
    "ru_qlp",
    "svd",
]
