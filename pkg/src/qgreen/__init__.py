"""Caputo fractional q-difference boundary value problems with m-point and
Riemann-Stieltjes conditions: q-calculus kernels, the Green's function,
the cone fixed-point solver and independent verification."""

from .errors import (
    ConfigError,
    DomainError,
    HypothesisViolation,
    MonotonicityViolation,
    NegativeInput,
    NotConverged,
    QGreenError,
    TruncationNotConverged,
)
from .greenfn import GreenConstants, ProblemSpec, compute_constants, validate_hypotheses
from .measure import StieltjesMeasure, stieltjes_integrate
from .qkernel import QLattice, QParams
from .solver import QGridFunction, SolveReport, cone_seed, lambda_sweep, solve

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "GreenConstants",
    "HypothesisViolation",
    "MonotonicityViolation",
    "NegativeInput",
    "NotConverged",
    "ProblemSpec",
    "QGreenError",
    "QGridFunction",
    "QLattice",
    "QParams",
    "SolveReport",
    "StieltjesMeasure",
    "TruncationNotConverged",
    "compute_constants",
    "cone_seed",
    "lambda_sweep",
    "solve",
    "stieltjes_integrate",
    "validate_hypotheses",
]
