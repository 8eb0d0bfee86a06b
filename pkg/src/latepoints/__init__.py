"""Late points of the simple random walk cover of the two-dimensional torus.

Modules
-------
ultrametric
    The matrix class M_j, maximal decompositions, ``chi`` and ``xi``.
exponents
    Closed-form tuple exponents ``rho_hat_j`` and ``rho_j``.
lattice_walk
    Walks on the torus and disk, killed Green's functions, covering runs.
hitting_kernel
    The point-set Green kernel ``Q``, first-return matrix ``U`` and the cofactor hitting formula.
config_geometry
    Distance classes of configurations and their matrix assignment.
late_sim
    Late sets, clustered tuple counts and exponent regression.
"""

from .errors import (
    ClassError,
    ConditioningError,
    ConfigError,
    DimensionError,
    DomainError,
    IncompleteTraceError,
    LatePointsError,
    PlacementError,
    ResourceError,
    ScaleError,
)
from .exponents import ExponentParams, rho, rho_hat
from .ultrametric import UltraMatrix, chi, chi_merge, chi_min, equidistant, is_member, maximal_decompose, xi

__version__ = "0.1.0"

__all__ = [
    "ClassError",
    "ConditioningError",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "ExponentParams",
    "IncompleteTraceError",
    "LatePointsError",
    "PlacementError",
    "ResourceError",
    "ScaleError",
    "UltraMatrix",
    "chi",
    "chi_merge",
    "chi_min",
    "equidistant",
    "is_member",
    "maximal_decompose",
    "rho",
    "rho_hat",
    "xi",
]
