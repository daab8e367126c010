"""Renormalization of real quadratic maps and numerical complex bounds."""

from .annulus_modulus import ModulusEstimate, modulus, modulus_lower_bound_check, round_annulus
from .complex_bounds import (
    InvariantSetApprox,
    PLRestriction,
    SweepTable,
    compact_containment_check,
    complex_bounds_sweep,
    find_pl_restriction,
    hull_boundary,
    invariance_check,
    invariant_set,
)
from .curves import DomainBoundary
from .errors import (
    ContractError,
    DomainError,
    GeometryError,
    NoIntersection,
    NoRestrictionFound,
    NoRoot,
    RenormLabError,
    ToleranceError,
    TraceError,
)
from .quadratic_dynamics import (
    QuadraticMap,
    RenormLevel,
    feigenbaum_parameter,
    find_superstable,
    renorm_cascade,
    verify_real_bounds,
)
from .renormalization import (
    EpsteinMap,
    Tower,
    build_tower,
    convergence_estimate,
    epstein_map,
    epstein_verify,
    omega_boundary,
    rescale,
    trace_omega,
)
from .slit_geometry import (
    PoincareRegion,
    SlitPlane,
    hyperbolic_distance,
    k_of_theta,
    ls_intersection,
    poincare_region,
    square_image_boundary,
)

__version__ = "0.1.0"
