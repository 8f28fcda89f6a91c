"""Exception types shared across the package."""

from __future__ import annotations


class HeatKernelError(Exception):
    """Base class for all errors raised by heatladder."""


class DomainError(HeatKernelError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class SingularityError(HeatKernelError, ArithmeticError):
    """A jet division hit a genuine pole (numerator vanishes to lower order)."""


class TruncationError(HeatKernelError):
    """A series did not reach its tolerance within the allowed number of terms."""

    def __init__(self, message: str, terms: int, bound: float):
        super().__init__(f"{message} (terms={terms}, tail bound={bound:.3e})")
        self.terms = terms
        self.bound = bound


class AccuracyError(HeatKernelError):
    """A quadrature or solver could not certify the requested accuracy."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (error estimate={estimate:.3e})")
        self.estimate = estimate
