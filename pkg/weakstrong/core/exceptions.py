"""
Exception hierarchy for the weak-to-strong measurement simulator.

Validation errors describe inputs that can never produce an answer (the CLI
maps them to exit code 2); computation errors describe numerical failures on
otherwise valid inputs (exit code 3).
"""

from typing import Optional


class WeakStrongError(Exception):
    """Root of every error raised by this package."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ValidationError(WeakStrongError, ValueError):
    """An input lies outside the domain of the requested operation."""


class ComputationError(WeakStrongError, RuntimeError):
    """A valid request could not be evaluated numerically."""


class PoleError(ValidationError):
    """The weak value diverges (orthogonal post-selection, theta = 0)."""


class NonInvertible(ValidationError):
    """A pointer shift carries no information about the transition factor."""


class GridTooCoarse(ValidationError):
    """A phase-space grid would alias the cat-state interference fringes."""


class DimensionTooSmall(ValidationError):
    """The Fock truncation is below the supported minimum."""


class KOutOfRange(ValidationError):
    """A readout wavenumber exceeds the usable readout range."""


class InsufficientKRange(ValidationError):
    """A dataset does not reach far enough in k for Fourier inversion."""


class RankDeficient(ValidationError):
    """A least-squares density fit has more unknowns than records."""


class LinearRegimeViolated(ValidationError):
    """The small-k slope fit shows significant curvature."""


class DegenerateState(ComputationError):
    """The post-selected pointer state has (numerically) zero norm."""


class TruncationOverflow(ComputationError):
    """Probability mass reached the top of the truncated Fock basis."""


class PostSelectionFailed(ComputationError):
    """The post-selection succeeds with vanishing probability."""


class SolverFailure(ComputationError):
    """The constrained least-squares solver did not converge."""
