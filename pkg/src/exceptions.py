"""
Error types raised by the solver.

Configuration problems derive from ValueError as well, so callers that only
guard against bad input keep working; mathematical failures derive from
MongeError alone.
"""


class MongeError(Exception):
    """Base class for every solver error."""


class InvalidConfigError(MongeError, ValueError):
    """Malformed or out-of-range configuration."""


class ConnectivityError(MongeError, ValueError):
    """The discrete manifold is not strongly connected."""


class SizeError(MongeError, ValueError):
    """Instance too large for an exhaustive method."""


class MarginalError(MongeError, ValueError):
    """Marginals are negative, unnormalized or of unequal mass."""


class MetricDegenerateError(MongeError):
    """A Randers drift reaches the unit ball of the dual norm."""


class SubcriticalError(MongeError):
    """The free-time action keeps decreasing along an edge (L + k not bounded below by a positive floor)."""

    def __init__(self, message: str, edge: int = -1, samples=None):
        super().__init__(message)
        self.edge = edge
        self.samples = samples or []


class SupercriticalityViolatedError(MongeError):
    """Shortest paths requested over nonpositive edge weights."""


class BracketError(MongeError):
    """The k bracket does not straddle the critical value."""


class RestrictionError(MongeError):
    """The tight set admits no plan with the prescribed marginals."""


class ToleranceError(MongeError):
    """A calibration tolerance is so loose that calibrated edges form a cycle."""


class CertificationError(MongeError):
    """A certificate report failed its thresholds."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
