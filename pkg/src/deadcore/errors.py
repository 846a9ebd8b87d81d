"""Exception types shared across the package."""

from __future__ import annotations


class DeadCoreError(Exception):
    """Base class for all package errors."""


class RegimeError(DeadCoreError):
    """The exponent triple lies outside the admissible range.

    Attributes
    ----------
    constraint : str
        Short identifier of the violated constraint, e.g. ``"m+q<=2"``.
    """

    def __init__(self, constraint: str, message: str | None = None):
        self.constraint = constraint
        super().__init__(message or f"inadmissible regime: {constraint}")


class DomainError(DeadCoreError, ValueError):
    """An argument is outside the domain of an operation."""


class ThresholdUndefined(DeadCoreError):
    """A closed-form threshold does not exist for this regime."""


class RangeError(DeadCoreError, ValueError):
    """Interpolation requested outside the span of a trajectory."""


class Inconclusive(DeadCoreError):
    """A shot ended without a classifiable outcome.

    The partial trajectory is kept on ``trajectory`` so callers can inspect it
    or retry with a wider span.
    """

    def __init__(self, message: str, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class BracketingFailure(DeadCoreError):
    """A scan found no classification change to bracket."""

    def __init__(self, message: str, scan=None):
        self.scan = scan
        super().__init__(message)


class JunctionError(DeadCoreError):
    """The two half-orbits do not meet within tolerance."""


class TailError(DeadCoreError):
    """An analytic tail correction is too large relative to the integral."""


class BlowUpError(DeadCoreError):
    """The physical-variable oracle did not return to zero within its span."""


class NonMonotoneWarning(UserWarning):
    """A probe grid shows a sign pattern that is not monotone."""
