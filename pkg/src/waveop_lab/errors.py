"""Exception types shared across the package."""

from __future__ import annotations


class WaveopError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(WaveopError):
    """An argument is outside the documented domain of an operation."""


class UnsupportedOrderError(WaveopError):
    """A derivative order beyond the implemented range was requested."""


class DegenerateInputError(WaveopError):
    """Input is degenerate (e.g. an identically vanishing potential)."""


class SingularityError(WaveopError):
    """Evaluation requested exactly on a kernel singularity."""


class RegularityError(WaveopError):
    """Zero-energy regularity check failed; expansion operations refuse to run."""


class ConfigError(WaveopError):
    """Malformed or inconsistent run configuration."""


class AccuracyError(WaveopError):
    """Quadrature failed to reach the requested tolerance.

    Carries the best available estimate and its a-posteriori error bound.
    """

    def __init__(self, message, best=None, err_est=None):
        super().__init__(message)
        self.best = best
        self.err_est = err_est


class HypothesisViolationWarning(UserWarning):
    """A decay/support hypothesis is violated; results are recorded anyway."""
