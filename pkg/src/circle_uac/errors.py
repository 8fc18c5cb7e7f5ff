"""Exception hierarchy shared by every module.

The class names double as the machine-readable error codes the CLI reports.
"""


class CircleUacError(Exception):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class MapSpecError(CircleUacError, ValueError):
    """Malformed or inconsistent circle-map description."""


class NonMonotone(CircleUacError):
    """A sampled lift is not strictly increasing."""


class WindingMismatch(CircleUacError):
    """Argument tracking did not close up to the declared degree."""


class NoConvergence(CircleUacError):
    """Root finder hit its iteration cap or lost its bracket."""


class DegenerateDenominator(CircleUacError, ZeroDivisionError):
    """A distortion ratio has a vanishing denominator."""


class QuadratureFailure(CircleUacError):
    """Adaptive quadrature could not meet the requested tolerance."""


class InvariantBreach(CircleUacError):
    """A quantity that must satisfy b > 0 or |mu| < 1 does not."""


class FloorViolation(CircleUacError):
    """Requested height is below the resolution floor of a grid-backed subject."""


class MonotonicityViolation(CircleUacError):
    """Conjugacy grid values are out of order."""


class ConsistencyViolation(CircleUacError):
    """Persisted conjugacy levels disagree with each other."""
