"""
Upper bounds on 1/λ_{p,q} through the composition operator of φ_a.

For a feasible (a, s, r):

    1/λ ≤ K_{p,s}^p · M_{r,q}^p · B_{r,s}^p

where K and M come from ``cusp_map`` and B_{r,s} is the Poincaré–Sobolev
constant of the reference domain Ω_n, supplied by a ``PoincareProvider``.
``optimize_bound`` searches (a, s, r) for the smallest such bound.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .cache import cached
from .cusp_map import (
    CLOSED_FORM,
    CuspMapping,
    kps_simplified_bound,
    simplified_threshold,
    transfer_constants,
    weight_envelope,
)
from .eigensolver import (
    DiscreteProblem,
    a_vector,
    bq_vector,
    lq_norm,
    project_constraint,
    x_norm,
)
from .mesh import REFERENCE, GradedMesh, cached_cusp_mesh, diameter
from .params import (
    DomainSpec,
    ValidatedProblem,
    require_bound_admissible,
    s_upper_unchecked,
    transfer_window,
)
from .quadrature import QuadConfig
from .validation import (
    CalculationError,
    ConstantInput,
    EmptyFeasibleSet,
    InfeasibleParams,
    InputValidator,
    StrategyDomainMismatch,
    ValidationError,
)

logger = logging.getLogger(__name__)

USER = "user"
PAYNE_WEINBERGER = "payne_weinberger"
NUMERIC_LOWER = "numeric_lower"
STRATEGIES = (USER, PAYNE_WEINBERGER, NUMERIC_LOWER)

TWO_PATH_RTOL = 1e-12


@dataclass(frozen=True, order=True)
class BoundParams:
    """Map exponent a and the intermediate exponents s < r."""

    a: float
    s: float
    r: float

    def to_dict(self) -> Dict[str, float]:
        return {"a": self.a, "s": self.s, "r": self.r}


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def feasible(
    bp: BoundParams, problem: ValidatedProblem, spec: DomainSpec, margin: float = 0.0
) -> FeasibilityReport:
    """
    Check every strict inequality a point (a, s, r) must satisfy:

        a ∈ 𝓘,  1 < s < min{p, n, t(a)},  s < r < ns/(n−s),  q < aγr/n

    With ``margin`` > 0 each inequality must hold with that much room.
    """
    require_bound_admissible(problem)
    a, s, r = bp.a, bp.s, bp.r
    n, gamma, p, q = spec.n, spec.gamma, problem.p, problem.q
    window = transfer_window(problem, spec, strict=False)
    checks: List[Tuple[str, float, float]] = [
        ("a > a_lo", window.a_lo, a),
        ("a < a_hi", a, window.a_hi),
        ("s > 1", 1.0, s),
        ("s < p", s, p),
        ("s < n", s, float(n)),
    ]
    if a > 0:
        checks.append(("s < t(a)", s, s_upper_unchecked(a, p, problem.alpha, spec)))
    checks.append(("r > s", s, r))
    if s < n:
        checks.append(("r < ns/(n−s)", r, n * s / (n - s)))
    checks.append(("q < aγr/n", q, a * gamma * r / n))

    violations = tuple(
        f"{name}: {lhs:.6g} < {rhs:.6g} fails" for name, lhs, rhs in checks if not lhs + margin < rhs
    )
    return FeasibilityReport(ok=not violations, violations=violations)


@dataclass(frozen=True)
class PoincareProvider:
    """A value for B_{r,s}(Ω_n) and how far it can be trusted."""

    strategy: str
    value: float
    certified: bool
    r: Optional[float] = None
    s: Optional[float] = None
    notes: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"unknown Poincaré strategy {self.strategy!r}",
                field="strategy",
                value=self.strategy,
                suggestions=[f"Use one of {', '.join(STRATEGIES)}"],
            )
        object.__setattr__(self, "value", InputValidator.positive(self.value, "B"))

    def scaled(self, tau: float) -> "PoincareProvider":
        return PoincareProvider(self.strategy, tau * self.value, self.certified, self.r, self.s, self.notes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "strategy": self.strategy,
            "value": self.value,
            "certified": self.certified,
            "r": self.r,
            "s": self.s,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class PoincareConfig:
    """How B_{r,s} is obtained for a bound."""

    strategy: str = NUMERIC_LOWER
    value: Optional[float] = None
    certified: bool = False
    diameter: Optional[float] = None
    N: int = 16
    kappa: float = 1.0
    starts: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"unknown Poincaré strategy {self.strategy!r}",
                field="strategy",
                value=self.strategy,
                suggestions=[f"Use one of {', '.join(STRATEGIES)}"],
            )
        if self.strategy == USER and self.value is None:
            raise ValidationError("strategy 'user' needs a value", field="value",
                                  suggestions=["Pass --b-value"])
        if self.value is not None:
            InputValidator.positive(self.value, "value")
        if self.diameter is not None:
            InputValidator.positive(self.diameter, "diameter")
        InputValidator.integer_at_least(self.N, 2, "N")
        InputValidator.integer_at_least(self.starts, 1, "starts")
        InputValidator.integer_at_least(self.seed, 0, "seed")

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def _reference_problem(r: float, s: float) -> ValidatedProblem:
    # unweighted gradient s-norm, L_r deviation; never fed to the bounds
    return ValidatedProblem(p=s, q=r, alpha=0.0, p_star=math.inf, bound_admissible=False)


def numeric_poincare(mesh: GradedMesh, r: float, s: float, starts: int = 20, seed: int = 0) -> float:
    """
    Discrete sup of ‖f − c_f‖_r / ‖∇f‖_s over nodal functions on ``mesh``,
    c_f the best L_r constant.

    L-BFGS ascent from ``starts`` seeded random starts. The gradient uses the
    envelope property of c_f, so c_f is held fixed when differentiating.
    """
    InputValidator.open_interval(r, 1.0, math.inf, "r")
    InputValidator.open_interval(s, 1.0, math.inf, "s")
    dp = DiscreteProblem.assemble(mesh, _reference_problem(r, s))

    def negative_ratio(v: np.ndarray) -> Tuple[float, np.ndarray]:
        try:
            u = project_constraint(dp, v, r).values
        except ConstantInput:
            return 0.0, np.zeros_like(v)
        dev = lq_norm(dp, u, r)
        grad_norm = x_norm(dp, u)
        ratio = dev / grad_norm
        d_dev = dev ** (1.0 - r) * bq_vector(dp, u, r)
        d_grad = grad_norm ** (1.0 - s) * a_vector(dp, u)
        return -ratio, -(d_dev - ratio * d_grad) / grad_norm

    rng = np.random.default_rng(seed)
    best = 0.0
    for k in range(starts):
        v0 = rng.standard_normal(mesh.n_vertices)
        res = minimize(negative_ratio, v0, jac=True, method="L-BFGS-B",
                       options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-10})
        logger.debug("poincare start %d: ratio=%.12g (%s)", k, -res.fun, res.message)
        best = max(best, -float(res.fun))
    if not best > 0:
        raise CalculationError(f"numeric Poincaré estimate is not positive (r={r}, s={s})")
    return best


@cached("poincare")
def cached_numeric_poincare(N: int, kappa: float, r: float, s: float, starts: int, seed: int) -> float:
    """``numeric_poincare`` on the reference triangle, memoized."""
    return numeric_poincare(cached_cusp_mesh(1.0, N, kappa), r, s, starts, seed)


def poincare_constant(
    strategy: str,
    r: float,
    s: float,
    ref_mesh: Optional[GradedMesh] = None,
    d: Optional[float] = None,
    value: Optional[float] = None,
    certified: bool = False,
    starts: int = 20,
    seed: int = 0,
) -> PoincareProvider:
    """
    Build a provider for B_{r,s}(Ω_n).

    payne_weinberger: d/π for r = s = 2 (convex domains), certified.
    numeric_lower: discrete estimate on ``ref_mesh`` of the reference
    triangle, never certified.
    user: ``value`` passed through; certified only when the caller says so.

    Raises:
        StrategyDomainMismatch: the strategy does not apply to (r, s) or the mesh.
    """
    if strategy == PAYNE_WEINBERGER:
        if (r, s) != (2.0, 2.0):
            raise StrategyDomainMismatch(
                f"Payne–Weinberger gives B only for r = s = 2 (got r={r}, s={s})",
                field="strategy",
                value=strategy,
                suggestions=["Use numeric_lower or a user value for other exponents"],
            )
        if d is None:
            if ref_mesh is None:
                raise ValidationError("payne_weinberger needs a diameter or a reference mesh", field="d")
            d = diameter(ref_mesh)
        d = InputValidator.positive(d, "d")
        return PoincareProvider(PAYNE_WEINBERGER, d / math.pi, True, r, s)
    if strategy == NUMERIC_LOWER:
        if ref_mesh is None or ref_mesh.domain != REFERENCE:
            raise StrategyDomainMismatch(
                "numeric_lower needs a mesh of the reference triangle",
                field="ref_mesh",
                suggestions=["Pass build_reference_mesh(N)"],
            )
        b = numeric_poincare(ref_mesh, r, s, starts, seed)
        return PoincareProvider(NUMERIC_LOWER, b, False, r, s,
                                (f"discrete estimate on N={ref_mesh.N}",))
    if strategy == USER:
        if value is None:
            raise ValidationError("user strategy needs a value", field="value")
        return PoincareProvider(USER, value, bool(certified), r, s)
    raise ValidationError(f"unknown Poincaré strategy {strategy!r}", field="strategy", value=strategy,
                          suggestions=[f"Use one of {', '.join(STRATEGIES)}"])


def resolve_provider(cfg: PoincareConfig, r: float, s: float) -> PoincareProvider:
    """
    Provider for B_{r,s} at the exponents an optimizer chose.

    Payne–Weinberger is used off (2, 2) only as an uncertified stand-in,
    with a warning and a provenance note.
    """
    if cfg.strategy == USER:
        assert cfg.value is not None
        return poincare_constant(USER, r, s, value=cfg.value, certified=cfg.certified)
    if cfg.strategy == NUMERIC_LOWER:
        b = cached_numeric_poincare(cfg.N, cfg.kappa, r, s, cfg.starts, cfg.seed)
        return PoincareProvider(NUMERIC_LOWER, b, False, r, s, (f"discrete estimate on N={cfg.N}",))
    d = cfg.diameter if cfg.diameter is not None else math.sqrt(2.0)
    if (r, s) == (2.0, 2.0):
        return poincare_constant(PAYNE_WEINBERGER, r, s, d=d)
    message = f"Payne–Weinberger value d/π applied at r={r:.6g}, s={s:.6g}; not certified"
    warnings.warn(message, UserWarning, stacklevel=2)
    return PoincareProvider(PAYNE_WEINBERGER, d / math.pi, False, r, s, (message,))


@dataclass
class BoundReport:
    """One evaluated bound and everything that went into it."""

    params: BoundParams
    k_ps: float
    m_rq: float
    b_rs: float
    inv_lambda_bound: float
    lambda_lower_bound: float
    certified: bool
    provider: PoincareProvider
    problem: ValidatedProblem
    spec: DomainSpec
    method: str = CLOSED_FORM
    notes: List[str] = field(default_factory=list)
    search: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "k_ps": self.k_ps,
            "m_rq": self.m_rq,
            "b_rs": self.b_rs,
            "inv_lambda_bound": self.inv_lambda_bound,
            "lambda_lower_bound": self.lambda_lower_bound,
            "certified": self.certified,
            "provider": self.provider.to_dict(),
            "problem": self.problem.as_dict(),
            "domain": {"n": self.spec.n, "gamma_exps": list(self.spec.gamma_exps), "gamma": self.spec.gamma},
            "method": self.method,
            "notes": list(self.notes),
            "search": dict(self.search),
        }


def expanded_inverse_bound(
    problem: ValidatedProblem, spec: DomainSpec, bp: BoundParams, b_value: float
) -> float:
    """
    The bound multiplied out:

        a^{p/q−1} c_a^{−1} D^p B^p ((p−s)/(np − s(aX+p)))^{(p−s)/s}
            · ((r−q)/(aγr − nq))^{(r−q)p/(rq)},   X = α+γ−p
    """
    a, s, r = bp.a, bp.s, bp.r
    n, gamma = spec.n, spec.gamma
    p, q, alpha = problem.p, problem.q, problem.alpha
    c_a, _ = weight_envelope(a, alpha, n)
    d = CuspMapping(a, spec).distortion_factor()
    base_s = (p - s) / (n * p - s * (a * (alpha + gamma - p) + p))
    base_r = (r - q) / (a * gamma * r - n * q)
    return (
        a ** (p / q - 1.0)
        / c_a
        * d**p
        * b_value**p
        * base_s ** ((p - s) / s)
        * base_r ** ((r - q) * p / (r * q))
    )


def eigen_bound(
    problem: ValidatedProblem,
    spec: DomainSpec,
    bp: BoundParams,
    provider: PoincareProvider,
    method: str = CLOSED_FORM,
    quad_cfg: Optional[QuadConfig] = None,
) -> BoundReport:
    """
    Evaluate 1/λ ≤ K^p M^p B^p at one feasible point.

    With the closed forms the product is checked against
    ``expanded_inverse_bound`` to 1e-12 relative.

    Raises:
        InfeasibleParams: ``bp`` fails a feasibility inequality.
    """
    report = feasible(bp, problem, spec)
    if not report:
        raise InfeasibleParams(f"(a, s, r) = ({bp.a:.6g}, {bp.s:.6g}, {bp.r:.6g}) is infeasible",
                               report.violations)
    p = problem.p
    tc = transfer_constants(bp.a, bp.s, bp.r, problem, spec, method, quad_cfg)
    notes = list(provider.notes)
    k = tc.k_ps
    if method == CLOSED_FORM:
        product = k**p * tc.m_rq**p * provider.value**p
        expanded = expanded_inverse_bound(problem, spec, bp, provider.value)
        if abs(product - expanded) > TWO_PATH_RTOL * abs(expanded):
            raise CalculationError(
                f"bound evaluation paths disagree: product={product!r}, expanded={expanded!r}"
            )
    threshold = simplified_threshold(bp.a, problem, spec)
    if bp.s < threshold:
        k_simple = kps_simplified_bound(bp.a, problem, spec)
        notes.append(f"simplified K bound {k_simple:.17g} applies (s below {threshold:.6g})")
        k = min(k, k_simple)
    inv = k**p * tc.m_rq**p * provider.value**p
    if not provider.certified:
        notes.append("non-certified B estimate; informational only")
    return BoundReport(
        params=bp,
        k_ps=k,
        m_rq=tc.m_rq,
        b_rs=provider.value,
        inv_lambda_bound=inv,
        lambda_lower_bound=1.0 / inv,
        certified=provider.certified,
        provider=provider,
        problem=problem,
        spec=spec,
        method=method,
        notes=notes,
    )


@dataclass(frozen=True)
class SearchConfig:
    """Grid and refinement settings of ``optimize_bound``."""

    grid_a: int = 33
    grid_s: int = 17
    grid_r: int = 17
    passes: int = 3
    tol: float = 1e-4
    margin: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("grid_a", "grid_s", "grid_r"):
            InputValidator.integer_at_least(getattr(self, name), 1, name)
        InputValidator.integer_at_least(self.passes, 0, "passes")
        InputValidator.tolerance(self.tol, "tol")
        InputValidator.tolerance(self.margin, "margin")

    def refined(self, factor: int = 2) -> "SearchConfig":
        return SearchConfig(self.grid_a * factor, self.grid_s * factor, self.grid_r * factor,
                            self.passes, self.tol, self.margin)

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def log_inverse_bound(
    a: np.ndarray, s: np.ndarray, r: np.ndarray, problem: ValidatedProblem, spec: DomainSpec
) -> np.ndarray:
    """log(K^p M^p) at B = 1, vectorized; nan where a bracket is not positive."""
    a, s, r = np.broadcast_arrays(np.asarray(a, float), np.asarray(s, float), np.asarray(r, float))
    n, gamma = spec.n, spec.gamma
    p, q, alpha = problem.p, problem.q, problem.alpha
    exps = np.asarray(spec.gamma_exps)
    d2 = np.sum((a[..., None] * exps - 1.0) ** 2, axis=-1) + (n - 1) + a * a
    c_a = n ** (alpha / 2.0) if alpha < 0 else 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        base_s = (p - s) / (n * p - s * (a * (alpha + gamma - p) + p))
        base_r = (r - q) / (a * gamma * r - n * q)
        log_k = 0.5 * np.log(d2) - np.log(a * c_a) / p + (p - s) / (p * s) * np.log(base_s)
        log_m = np.log(a) / q + (r - q) / (r * q) * np.log(base_r)
    return p * (log_k + log_m)


def _interior(lo: float, hi: float, count: int) -> np.ndarray:
    return lo + (hi - lo) * np.arange(1, count + 1) / (count + 1)


def _s_range(a: float, problem: ValidatedProblem, spec: DomainSpec) -> Tuple[float, float]:
    return 1.0, min(problem.p, float(spec.n), s_upper_unchecked(a, problem.p, problem.alpha, spec))


def _r_range(a: float, s: float, problem: ValidatedProblem, spec: DomainSpec) -> Tuple[float, float]:
    n = spec.n
    return max(s, n * problem.q / (a * spec.gamma)), n * s / (n - s)


def _from_unit(
    u: Tuple[float, float, float], problem: ValidatedProblem, spec: DomainSpec
) -> Optional[Tuple[float, float, float]]:
    """
    (a, s, r) from nested unit coordinates: a across the window, s across its
    range at a, r across its range at (a, s). None where a range is empty.
    """
    window = transfer_window(problem, spec)
    a = window.a_lo + u[0] * (window.a_hi - window.a_lo)
    s_lo, s_hi = _s_range(a, problem, spec)
    if not s_lo < s_hi:
        return None
    s = s_lo + u[1] * (s_hi - s_lo)
    r_lo, r_hi = _r_range(a, s, problem, spec)
    if not r_lo < r_hi:
        return None
    return a, s, r_lo + u[2] * (r_hi - r_lo)


def _to_unit(
    point: Tuple[float, float, float], problem: ValidatedProblem, spec: DomainSpec
) -> Tuple[float, float, float]:
    a, s, r = point
    window = transfer_window(problem, spec)
    s_lo, s_hi = _s_range(a, problem, spec)
    r_lo, r_hi = _r_range(a, s, problem, spec)
    return (
        (a - window.a_lo) / (window.a_hi - window.a_lo),
        (s - s_lo) / (s_hi - s_lo),
        (r - r_lo) / (r_hi - r_lo),
    )


def _grid(problem: ValidatedProblem, spec: DomainSpec, search: SearchConfig) -> np.ndarray:
    """Candidate (a, s, r) rows, each coordinate interior to its current range."""
    window = transfer_window(problem, spec)
    rows = []
    for a in _interior(window.a_lo, window.a_hi, search.grid_a):
        s_lo, s_hi = _s_range(a, problem, spec)
        if not s_lo < s_hi:
            continue
        for s in _interior(s_lo, s_hi, search.grid_s):
            r_lo, r_hi = _r_range(a, s, problem, spec)
            if not r_lo < r_hi:
                continue
            for r in _interior(r_lo, r_hi, search.grid_r):
                rows.append((a, s, r))
    return np.asarray(rows, dtype=float).reshape(-1, 3)


def _grid_mask(points: np.ndarray, problem: ValidatedProblem, spec: DomainSpec, margin: float) -> np.ndarray:
    return np.fromiter(
        (bool(feasible(BoundParams(*row), problem, spec, margin)) for row in points),
        dtype=bool,
        count=len(points),
    )


def golden_section(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4
) -> Tuple[float, float]:
    """
    Minimize a unimodal f on [lo, hi] to interval width ``tol``.

    Returns the better of the two final interior points and its value.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi_sq = (3.0 - math.sqrt(5.0)) / 2.0
    h = hi - lo
    if h <= tol:
        x = 0.5 * (lo + hi)
        return x, f(x)
    steps = int(math.ceil(math.log(tol / h) / math.log(inv_phi)))
    c, d = lo + inv_phi_sq * h, lo + inv_phi * h
    yc, yd = f(c), f(d)
    for _ in range(steps - 1):
        if yc < yd:
            hi, d, yd = d, c, yc
            h *= inv_phi
            c = lo + inv_phi_sq * h
            yc = f(c)
        else:
            lo, c, yc = c, d, yd
            h *= inv_phi
            d = lo + inv_phi * h
            yd = f(d)
    return (c, yc) if yc <= yd else (d, yd)


def _unit_objective(
    problem: ValidatedProblem, spec: DomainSpec, margin: float
) -> Callable[[Tuple[float, float, float]], float]:
    """Log-bound at nested unit coordinates; inf outside [margin, 1 − margin]³ or where infeasible."""

    def objective(u: Tuple[float, float, float]) -> float:
        if not all(margin <= x <= 1.0 - margin for x in u):
            return math.inf
        point = _from_unit(u, problem, spec)
        if point is None or not feasible(BoundParams(*point), problem, spec):
            return math.inf
        v = float(log_inverse_bound(point[0], point[1], point[2], problem, spec))
        return v if math.isfinite(v) else math.inf

    return objective


def _refine(
    start: Tuple[float, float, float], value: float, problem: ValidatedProblem, spec: DomainSpec,
    search: SearchConfig,
) -> Tuple[Tuple[float, float, float], float, int]:
    """
    Golden-section passes over each nested unit coordinate, then a joint
    Nelder–Mead polish. In these coordinates r follows its ceiling ns/(n−s)
    when s moves, so the search does not stall on that boundary.
    """
    objective = _unit_objective(problem, spec, search.margin)
    u = list(_to_unit(start, problem, spec))
    line_searches = 0
    for sweep in range(search.passes):
        for coord in range(3):

            def along(x: float) -> float:
                trial = list(u)
                trial[coord] = x
                return objective((trial[0], trial[1], trial[2]))

            x, fx = golden_section(along, search.margin, 1.0 - search.margin, search.tol)
            line_searches += 1
            if fx < value:
                u[coord] = x
                value = fx
        logger.debug("refinement pass %d: u=%s log-bound=%.12g", sweep + 1, u, value)
    if search.passes:
        polish = minimize(lambda v: objective((v[0], v[1], v[2])), np.asarray(u), method="Nelder-Mead",
                          options={"xatol": search.tol * 1e-2, "fatol": 1e-13, "maxiter": 2000})
        if polish.fun < value:
            u, value = [float(x) for x in polish.x], float(polish.fun)
            logger.debug("Nelder-Mead polish: u=%s log-bound=%.12g", u, value)
    point = _from_unit((u[0], u[1], u[2]), problem, spec)
    assert point is not None
    return point, value, line_searches


def optimize_bound(
    problem: ValidatedProblem,
    spec: DomainSpec,
    provider: PoincareProvider,
    search: SearchConfig = SearchConfig(),
) -> BoundReport:
    """
    Smallest bound over a deterministic grid, then refined by golden-section
    sweeps and a Nelder–Mead polish.

    B is a constant factor here, so the argmin does not depend on it. Ties on
    the grid go to the lexicographically smallest (a, s, r).

    Raises:
        EmptyWindow: the transfer window is empty.
        EmptyFeasibleSet: no grid point survives the feasibility margin.
    """
    points = _grid(problem, spec, search)
    if len(points):
        points = points[_grid_mask(points, problem, spec, search.margin)]
    if not len(points):
        raise EmptyFeasibleSet(
            "no feasible (a, s, r) on the search grid",
            error_code="EMPTY_FEASIBLE_SET",
            suggestions=["Refine the grid or lower the feasibility margin"],
        )
    values = log_inverse_bound(points[:, 0], points[:, 1], points[:, 2], problem, spec)
    values = np.where(np.isfinite(values), values, np.inf)
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0], values))
    best = order[0]
    grid_point = (float(points[best, 0]), float(points[best, 1]), float(points[best, 2]))
    logger.info("grid optimum over %d feasible points: (a, s, r)=%s", len(points), grid_point)

    refined, value, line_searches = _refine(grid_point, float(values[best]), problem, spec, search)
    bp = BoundParams(*refined)
    report = eigen_bound(problem, spec, bp, provider)
    report.search = {
        "grid": [search.grid_a, search.grid_s, search.grid_r],
        "feasible_points": int(len(points)),
        "grid_point": list(grid_point),
        "grid_log_bound": float(values[best]),
        "refined_log_bound": value,
        "line_searches": line_searches,
        "passes": search.passes,
        "tol": search.tol,
    }
    return report
