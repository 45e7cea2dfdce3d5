"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class DiluteWignerError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(DiluteWignerError, ValueError):
    pass


class UnsupportedDistributionError(DiluteWignerError):
    pass


class MissingMomentError(DiluteWignerError, KeyError):
    def __init__(self, order: int):
        super().__init__(f"moment E a^{order} is not available")
        self.order = order


class ResourceLimitError(DiluteWignerError):
    """An enumeration or dense computation would exceed its configured budget."""


class ConvergenceError(DiluteWignerError):
    def __init__(self, message: str, last_value: float, iterations: int):
        super().__init__(message)
        self.last_value = last_value
        self.iterations = iterations


class UnsupportedClassError(DiluteWignerError):
    pass


class InvariantViolation(DiluteWignerError, AssertionError):
    pass
