"""Exception types raised by the public API.

Class names double as the machine-readable error codes emitted by the CLI.
"""


class ShelyapError(Exception):
    """Base class for all package errors."""


class NonPositiveTime(ShelyapError):
    """Time horizon (or kernel time argument) must be strictly positive."""


class UnsortedLocations(ShelyapError):
    """Locations must be strictly increasing."""


class NonPositiveMultiplicity(ShelyapError):
    """Multiplicities must be integers >= 1."""


class LengthMismatch(ShelyapError):
    """Paired sequences disagree in length, or a sequence is empty."""


class NoMerge(ShelyapError):
    """The simulation produced no merge event."""


class OutOfRange(ShelyapError):
    """Evaluation point lies outside a path's breakpoint span."""


class DimensionTooLarge(ShelyapError):
    """Chain QP dimension exceeds the exhaustive oracle's cap."""


class HypothesisNotMet(ShelyapError):
    """Instance does not satisfy the precondition of the requested check."""


class NuTooLarge(ShelyapError):
    """Total multiplicity exceeds the tensor-grid quadrature cap."""


class InvalidContour(ShelyapError):
    """Contour offsets would place a pole on or across the integration surface."""


class NonPositiveMoment(ShelyapError):
    """Quadrature returned a non-positive moment; no log-rate exists."""
