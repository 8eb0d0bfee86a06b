"""Exception hierarchy shared by all modules."""


class LatePointsError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(LatePointsError, ValueError):
    """Input matrix has the wrong shape."""


class ClassError(LatePointsError, ValueError):
    """Matrix is not a member of the ultrametric class M_j."""


class DomainError(LatePointsError, ValueError):
    """Argument outside the admissible range of an operation."""


class PlacementError(LatePointsError, ValueError):
    """Block placements overlap or do not cover the index set."""


class ConditioningError(LatePointsError, ArithmeticError):
    """Linear system is numerically singular."""


class ConfigError(LatePointsError, ValueError):
    """Point configuration violates its invariants."""


class ScaleError(LatePointsError, ValueError):
    """Lattice scale n is below the threshold an operation needs."""


class ResourceError(LatePointsError, RuntimeError):
    """Enumeration budget exceeded.

    ``partial`` holds whatever lower bound had been accumulated.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IncompleteTraceError(LatePointsError, ValueError):
    """Walk trace did not cover the torus."""
