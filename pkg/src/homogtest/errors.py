"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class BracketError(ValueError):
    """The target value of a root search is not bracketed by the interval."""


class ConvergenceError(ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    The best available estimate is kept on ``estimate`` so callers can decide
    whether it is usable anyway.
    """

    def __init__(self, message: str, estimate=None):
        super().__init__(message)
        self.estimate = estimate
