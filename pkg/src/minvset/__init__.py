"""Invariant sets of exactly solvable differential operators on fixed-degree polynomials."""

__version__ = "0.1.0"

from .bipoly import BiPoly, bipoly_slice_x
from .correspondence import (
    AffineMap,
    detect_affine_ifs,
    extract_linear_in_x,
    extract_linear_in_z,
    extract_pinned_rational,
    family_operator,
    one_point_sets,
    operator_from_affine_ifs,
    phi,
    psi,
)
from .dynamics import (
    IterationConfig,
    IterationReport,
    boundedness_analysis,
    Mode,
    Status,
    convergence_study,
    existence_check,
    minimal_invariant_set,
    seed_points,
    tau_step,
    theta_step,
)
from .errors import MinvsetError, ParseError, PreconditionError
from .geometry import (
    ConvexPolygon,
    PointCloud,
    convex_hull,
    dist_to_polygon,
    grid_snap,
    hausdorff,
)
from .julia import (
    RationalMap,
    cross_validate_m1,
    is_nonexceptional,
    julia_backward,
    rational_from_operator,
)
from .operator import (
    DiffOperator,
    apply,
    compose,
    detect_scalar_power,
    eigenpolynomial,
    fuchs_index,
    fundamental_polygon,
    is_exactly_solvable,
    is_nondegenerate,
    matrix_on_Cn,
    operator_from_eigenpairs,
    symbol_eigenvalues,
)
from .poly import ComplexPoly, falling_factorial, poly_derive, poly_eval, poly_from_roots, poly_roots

__all__ = [
    "BiPoly",
    "bipoly_slice_x",
    "AffineMap",
    "detect_affine_ifs",
    "extract_linear_in_x",
    "extract_linear_in_z",
    "extract_pinned_rational",
    "family_operator",
    "one_point_sets",
    "operator_from_affine_ifs",
    "phi",
    "psi",
    "IterationConfig",
    "IterationReport",
    "boundedness_analysis",
    "Mode",
    "Status",
    "convergence_study",
    "existence_check",
    "minimal_invariant_set",
    "seed_points",
    "tau_step",
    "theta_step",
    "MinvsetError",
    "ParseError",
    "PreconditionError",
    "ConvexPolygon",
    "PointCloud",
    "convex_hull",
    "dist_to_polygon",
    "grid_snap",
    "hausdorff",
    "RationalMap",
    "cross_validate_m1",
    "is_nonexceptional",
    "julia_backward",
    "rational_from_operator",
    "DiffOperator",
    "apply",
    "compose",
    "detect_scalar_power",
    "eigenpolynomial",
    "fuchs_index",
    "fundamental_polygon",
    "is_exactly_solvable",
    "is_nondegenerate",
    "matrix_on_Cn",
    "operator_from_eigenpairs",
    "symbol_eigenvalues",
    "ComplexPoly",
    "falling_factorial",
    "poly_derive",
    "poly_eval",
    "poly_from_roots",
    "poly_roots",
]
