"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the domain where a function is defined."""


class DistributionalCaseError(DomainError):
    """The requested value is a distribution (Dirac delta), not a number."""


class EvaluationError(ArithmeticError):
    """A numerical procedure failed to converge.

    ``partial`` holds the best estimate reached and ``detail`` a short
    description (term count, error bound, ...).
    """

    def __init__(self, message: str, partial=None, detail=None):
        super().__init__(message)
        self.partial = partial
        self.detail = detail


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""
