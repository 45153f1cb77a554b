"""Exception types raised across the package."""


class ZollError(Exception):
    """Base class for all package errors."""


class ProfileInvalid(ZollError, ValueError):
    """The profile does not define a smooth positive metric."""


class PoleEvaluation(ZollError, ValueError):
    """Pointwise chart evaluation requested inside the pole guard band."""


class StepUnderflow(ZollError, RuntimeError):
    """The adaptive controller could not meet the tolerance."""


class NoConnectionFound(ZollError, RuntimeError):
    """Shooting failed to find a geodesic joining the two points."""


class CollapseDetected(ZollError):
    """A curve shortened below the collapse tolerance.

    The collapsed curve is kept on ``curve`` so callers can inspect it.
    """

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class NotCertifiedZoll(ZollError):
    """Exact Zoll widths were requested for a metric without a passing certification."""


class NotMultipleOf2Pi(ZollError, ValueError):
    """A width value is not an integer multiple of 2*pi."""


class PartitionCapExceeded(ZollError, ValueError):
    """Explicit enumeration of geodesic sums is capped; use the count instead."""
