"""Exception hierarchy shared by all modules."""


class HypMetricError(Exception):
    """Base class for library errors."""


class EmptyBoundary(HypMetricError):
    pass


class OutsideDomain(HypMetricError, ValueError):
    pass


class BoundaryProximity(HypMetricError, ValueError):
    """Point is too close to the boundary for a stable density value."""


class TooCloseToBoundary(BoundaryProximity):
    """Grid sampling requested within two cell-widths of the boundary."""


class InvalidLune(HypMetricError, ValueError):
    pass


class TooFewPoints(HypMetricError, ValueError):
    pass


class DegenerateDomain(HypMetricError, ValueError):
    pass


class NotConverged(HypMetricError):
    """Newton iteration stopped before reaching the residual tolerance.

    ``field`` holds the best iterate.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnsupportedBoundary(HypMetricError, ValueError):
    pass


class AntipodalPair(HypMetricError, ValueError):
    pass


class WitnessNotFound(HypMetricError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotApplicable(HypMetricError):
    pass


class SpecParse(HypMetricError, ValueError):
    """Malformed domain specification; message carries the location."""
