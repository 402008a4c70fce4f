"""Parameter-free SDP solver for fractional programs with SOS-convex data."""

from .cct import (
    AssumptionViolated,
    CctPoint,
    FractionalProgram,
    NonAttainment,
    Slater,
    SolveConfig,
    SolveReport,
    Status,
    assemble_D,
    assemble_Q,
    cct_map,
    extract_solution,
    min_convex_poly,
    slater_check,
    solve_fractional,
)
from .poly import (
    MonomialBasis,
    Polynomial,
    evaluate,
    gradient,
    hessian,
    monomial_basis,
    perspective_eval,
)
from .sos import (
    GramCertificate,
    Indeterminate,
    MomentVector,
    Refutation,
    Verdict,
    coefficient_locator_matrices,
    is_sos,
    is_sos_convex,
    linear_functional,
    moment_matrix,
)

__version__ = "0.1.0"
