"""
cusp-spectra - Neumann eigenvalues of the weighted p-Laplacian on cusps

Computes the first nontrivial Neumann (p, q)-eigenvalue of

    −div(|x|^α |∇u|^{p−2} ∇u) = λ ‖u‖_q^{p−q} |u|^{q−2} u

on the outward Hölder cusp Ω_γ = {0 < x2 < 1, 0 < x1 < x2^γ1}, and evaluates
the upper bounds on 1/λ obtained by composing with φ_a(x) = (x1 x2^{aγ1−1}, x2^a).

Features:
- admissibility chains for (p, q, α) and the window of map exponents a
- closed-form and quadrature values of the transfer constants K_{p,s}, M_{r,q}
- bound optimization over (a, s, r) with three Poincaré-constant providers
- graded P1 finite elements with nonlinear inverse iteration
- reproducible CLI runs with manifests, JSON and CSV output

Example usage:
    >>> from cusp_spectra import DomainSpec, validate_problem, transfer_window
    >>> spec = DomainSpec.planar(2.0)
    >>> problem = validate_problem(spec, p=2.0, q=2.0, alpha=0.0)
    >>> transfer_window(problem, spec)
    TransferWindow(a_lo=0.0, a_hi=0.6666666666666666)
"""

from .bounds import (
    BoundParams,
    BoundReport,
    PoincareConfig,
    PoincareProvider,
    SearchConfig,
    eigen_bound,
    feasible,
    optimize_bound,
    poincare_constant,
    resolve_provider,
)
from .cusp_map import (
    CuspMapping,
    composition_inequality_check,
    diff_norm_bound,
    jacobian,
    kps_closed_form,
    kps_quadrature,
    map_point,
    mrq_closed_form,
    mrq_quadrature,
    transfer_constants,
)
from .eigensolver import (
    DiscreteProblem,
    EigenResult,
    GridFunction,
    SolverConfig,
    direct_eigensolve_p2,
    inverse_iteration,
    rayleigh_descent,
    rayleigh_quotient,
)
from .mesh import GradedMesh, build_cusp_mesh, build_reference_mesh
from .params import (
    DomainSpec,
    ValidatedProblem,
    admit_discrete_problem,
    derive_gamma,
    sobolev_exponent,
    transfer_window,
    validate_problem,
)
from .validation import CuspSpectraError

try:
    from importlib.metadata import version as _pkg_version

    __version__ = _pkg_version("cusp-spectra")
except Exception:  # source tree without installed metadata
    from ._version import __version__

__all__ = [
    "BoundParams",
    "BoundReport",
    "CuspMapping",
    "CuspSpectraError",
    "DiscreteProblem",
    "DomainSpec",
    "EigenResult",
    "GradedMesh",
    "GridFunction",
    "PoincareConfig",
    "PoincareProvider",
    "SearchConfig",
    "SolverConfig",
    "ValidatedProblem",
    "admit_discrete_problem",
    "build_cusp_mesh",
    "build_reference_mesh",
    "composition_inequality_check",
    "derive_gamma",
    "diff_norm_bound",
    "direct_eigensolve_p2",
    "eigen_bound",
    "feasible",
    "inverse_iteration",
    "jacobian",
    "kps_closed_form",
    "kps_quadrature",
    "map_point",
    "mrq_closed_form",
    "mrq_quadrature",
    "optimize_bound",
    "poincare_constant",
    "rayleigh_descent",
    "rayleigh_quotient",
    "resolve_provider",
    "sobolev_exponent",
    "transfer_constants",
    "transfer_window",
    "validate_problem",
    "__version__",
]

__license__ = "MIT"
