"""Numerical laboratory for a two-parameter family of contact metric
3-manifolds: exact-jet frame geometry, curvature extraction, biharmonic
curves and surfaces on the level leaves, and the profile ODE whose
solutions foliate the space by proper biharmonic leaves.
"""

from .jets import (
    ConstantFamily,
    DomainError,
    Jet3,
    JetArithmeticError,
    LambdaFamily,
    PowerFamily,
    SqrtLinearFamily,
    TableFamily,
    fd_crosscheck,
)
from .manifold import (
    FrameVector,
    GaugeFunctions,
    ModelSpace,
    Point,
    PolyGauge,
    Sign,
    SinGauge,
    ZeroGauge,
    verify_structure,
)
from .tensor_kernel import (
    AuditReport,
    KappaMu,
    audit_identities,
    connection_coeffs,
    covariant_derivative,
    extract_kappa_mu,
    integrability_check,
    point_kernel,
    scalar_curvature,
)
from .biharmonic import (
    AntiInvariantSurface,
    BiharmonicityReport,
    LegendreCurve,
    RootRecord,
    characterization_residual,
    curve_bitension,
    curve_criterion,
    curve_report,
    find_roots,
    surface_bitension,
    surface_criterion,
    surface_report,
)
from .foliation import (
    FoliationParams,
    OdeSolution,
    foliation_rhs,
    integrate_foliation,
    solution_family,
    space_from_solution,
    verify_first_integral,
)

__version__ = "0.1.0"

__all__ = [
    "AntiInvariantSurface",
    "AuditReport",
    "BiharmonicityReport",
    "ConstantFamily",
    "DomainError",
    "FoliationParams",
    "FrameVector",
    "GaugeFunctions",
    "Jet3",
    "JetArithmeticError",
    "KappaMu",
    "LambdaFamily",
    "LegendreCurve",
    "ModelSpace",
    "OdeSolution",
    "Point",
    "PolyGauge",
    "PowerFamily",
    "RootRecord",
    "Sign",
    "SinGauge",
    "SqrtLinearFamily",
    "TableFamily",
    "ZeroGauge",
    "audit_identities",
    "characterization_residual",
    "connection_coeffs",
    "covariant_derivative",
    "curve_bitension",
    "curve_criterion",
    "curve_report",
    "extract_kappa_mu",
    "fd_crosscheck",
    "find_roots",
    "foliation_rhs",
    "integrability_check",
    "integrate_foliation",
    "point_kernel",
    "scalar_curvature",
    "solution_family",
    "space_from_solution",
    "surface_bitension",
    "surface_criterion",
    "surface_report",
    "verify_first_integral",
    "verify_structure",
]
