"""
First nontrivial Neumann eigenvalue of the weighted p-Laplacian.

Continuous P1 elements on a graded mesh. The gradient of a nodal function is
constant on each triangle, so the weighted energy is exactly

    ‖u‖_X^p = Σ_t ω_t·|∇u_t|^p,   ω_t = ∫_t |x|^α dx,

with ω_t taken from an interior quadrature rule (no point on the tip). The
pairings used by the inverse iteration are

    ⟨Au, v⟩ = Σ_t ω_t |∇u_t|^{p-2} ∇u_t·∇v_t,    ⟨Bu, v⟩ = ∫ u v dx.

Solvers:
    inverse_iteration     A(φ_{n+1}) = μ_n B(φ_n) for q = 2
    rayleigh_descent      constrained Rayleigh minimization for any q
    direct_eigensolve_p2  dense generalized eigenproblem, p = q = 2
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.sparse.linalg import spsolve

from .mesh import GradedMesh, QuadratureRule, gradient_operators, interpolation_matrix
from .params import ValidatedProblem
from .validation import (
    CollapsedIterate,
    ConstantInput,
    InputValidator,
    MaxIterations,
    NonconvergedInner,
    NonfiniteIntegrand,
    SingularMass,
    ValidationError,
    ZeroFunction,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal coefficients of a P1 function on ``mesh``."""

    mesh: GradedMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.mesh.n_vertices,):
            raise ValidationError(
                f"expected {self.mesh.n_vertices} nodal values, got shape {vals.shape}",
                field="values",
            )
        if not np.all(np.isfinite(vals)):
            raise NonfiniteIntegrand("grid function has non-finite coefficients")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def interpolate(cls, mesh: GradedMesh, func: Any) -> "GridFunction":
        v = mesh.vertices
        return cls(mesh, np.broadcast_to(func(v[:, 0], v[:, 1]), (mesh.n_vertices,)))

    @classmethod
    def random(cls, mesh: GradedMesh, seed: int = 0) -> "GridFunction":
        rng = np.random.default_rng(seed)
        return cls(mesh, rng.standard_normal(mesh.n_vertices))

    def __mul__(self, t: float) -> "GridFunction":
        return GridFunction(self.mesh, t * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.mesh, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.mesh, self.values - other.values)


FunctionLike = Union[GridFunction, np.ndarray]


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets of the inner and outer solvers."""

    tol: float = 1e-10
    inner_tol: float = 1e-12
    kkt_tol: float = 1e-9
    weak_tol: float = 1e-4
    max_outer: int = 500
    max_inner: int = 500
    eps_min: float = 1e-12
    eps_factor: float = 1e-2
    eps_rate: float = 0.5
    collapse_tol: float = 1e-14
    quad_order: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("tol", "inner_tol", "kkt_tol", "weak_tol", "eps_min", "eps_factor",
                     "eps_rate", "collapse_tol"):
            InputValidator.tolerance(getattr(self, name), name)
        InputValidator.integer_at_least(self.max_outer, 1, "max_outer")
        InputValidator.integer_at_least(self.max_inner, 1, "max_inner")
        InputValidator.integer_at_least(self.seed, 0, "seed")
        if self.quad_order not in (1, 2, 4):
            raise ValidationError(f"quad_order={self.quad_order} not in (1, 2, 4)",
                                  field="quad_order", value=self.quad_order)

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """
    Assembled data for one (mesh, p, q, α) problem; immutable after assembly.

    Attributes:
        weight_samples: |x|^α at the quadrature points, shape (T, k)
        omega: ω_t = ∫_t |x|^α, shape (T,)
        mass: consistent P1 mass matrix
        lumped: row sums of ``mass`` (= M·1)
    """

    mesh: GradedMesh
    problem: ValidatedProblem
    rule: QuadratureRule
    weight_samples: np.ndarray
    omega: np.ndarray
    gx: sparse.csr_matrix
    gy: sparse.csr_matrix
    interp: sparse.csr_matrix
    qweights: np.ndarray
    mass: sparse.csr_matrix
    lumped: np.ndarray

    @classmethod
    def assemble(
        cls, mesh: GradedMesh, problem: ValidatedProblem, rule: Optional[QuadratureRule] = None
    ) -> "DiscreteProblem":
        rule = rule or QuadratureRule.of_order(2)
        points, weights = rule.physical(mesh)
        radius = np.hypot(points[..., 0], points[..., 1])
        with np.errstate(divide="ignore"):
            samples = radius**problem.alpha
        if not (np.all(np.isfinite(samples)) and np.all(samples > 0)):
            raise NonfiniteIntegrand(
                "weight |x|^α is not finite and positive at every quadrature point",
                suggestions=["Use an interior quadrature rule; the tip must not be sampled"],
            )
        omega = np.sum(weights * samples, axis=1)
        gx, gy = gradient_operators(mesh)
        interp = interpolation_matrix(mesh, rule)
        qweights = weights.reshape(-1)
        mass = (interp.T @ sparse.diags(qweights) @ interp).tocsr()
        lumped = np.asarray(mass.sum(axis=1)).ravel()
        logger.debug("assembled problem on %d vertices (p=%g, q=%g, α=%g)",
                     mesh.n_vertices, problem.p, problem.q, problem.alpha)
        return cls(mesh, problem, rule, samples, omega, gx, gy, interp, qweights, mass, lumped)

    @property
    def p(self) -> float:
        return self.problem.p

    @property
    def q(self) -> float:
        return self.problem.q

    @property
    def area(self) -> float:
        return float(np.sum(self.qweights))


def _coeffs(dp: DiscreteProblem, u: FunctionLike) -> np.ndarray:
    vals = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if vals.shape != (dp.mesh.n_vertices,):
        raise ValidationError(f"expected {dp.mesh.n_vertices} coefficients, got {vals.shape}",
                              field="u")
    return vals


def _gradients(dp: DiscreteProblem, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return dp.gx @ u, dp.gy @ u


def _power(mag: np.ndarray, exponent: float) -> np.ndarray:
    """mag**exponent with 0 wherever mag = 0."""
    out = np.zeros_like(mag)
    nz = mag > 0
    out[nz] = mag[nz] ** exponent
    return out


def x_norm(dp: DiscreteProblem, u: FunctionLike) -> float:
    """‖u‖_X = (Σ ω_t |∇u_t|^p)^{1/p}; zero exactly for constants."""
    gx, gy = _gradients(dp, _coeffs(dp, u))
    return float(np.dot(dp.omega, np.hypot(gx, gy) ** dp.p)) ** (1.0 / dp.p)


def lq_norm(dp: DiscreteProblem, u: FunctionLike, q: Optional[float] = None) -> float:
    q = dp.q if q is None else q
    values = dp.interp @ _coeffs(dp, u)
    return float(np.dot(dp.qweights, np.abs(values) ** q)) ** (1.0 / q)


def a_vector(dp: DiscreteProblem, u: FunctionLike) -> np.ndarray:
    """Nodal representation of A(u): entry i is ⟨Au, φ_i⟩."""
    gx, gy = _gradients(dp, _coeffs(dp, u))
    coef = dp.omega * _power(np.hypot(gx, gy), dp.p - 2.0)
    return dp.gx.T @ (coef * gx) + dp.gy.T @ (coef * gy)


def apply_A(dp: DiscreteProblem, u: FunctionLike, v: FunctionLike) -> float:
    """⟨Au, v⟩ = Σ ω_t |∇u|^{p-2} ∇u·∇v."""
    ux, uy = _gradients(dp, _coeffs(dp, u))
    vx, vy = _gradients(dp, _coeffs(dp, v))
    coef = dp.omega * _power(np.hypot(ux, uy), dp.p - 2.0)
    return float(np.dot(coef, ux * vx + uy * vy))


def apply_B(dp: DiscreteProblem, u: FunctionLike, v: FunctionLike) -> float:
    """⟨Bu, v⟩ = ∫ u v dx, exact for P1 with the order-2 rule."""
    return float(np.dot(dp.interp @ _coeffs(dp, u), dp.qweights * (dp.interp @ _coeffs(dp, v))))


def bq_vector(dp: DiscreteProblem, u: FunctionLike, q: Optional[float] = None) -> np.ndarray:
    """Nodal representation of ∫|u|^{q-2}u φ_i dx."""
    q = dp.q if q is None else q
    values = dp.interp @ _coeffs(dp, u)
    return dp.interp.T @ (dp.qweights * _power(np.abs(values), q - 2.0) * values)


def energy(dp: DiscreteProblem, w: FunctionLike, load: np.ndarray) -> float:
    """J(w) = (1/p)·‖w‖_X^p − ⟨load, w⟩."""
    return x_norm(dp, w) ** dp.p / dp.p - float(np.dot(load, _coeffs(dp, w)))


def constraint_residual(dp: DiscreteProblem, u: FunctionLike, q: Optional[float] = None) -> float:
    """∫ |u|^{q-2} u dx."""
    q = dp.q if q is None else q
    values = dp.interp @ _coeffs(dp, u)
    return float(np.dot(dp.qweights, _power(np.abs(values), q - 2.0) * values))


def project_constraint(dp: DiscreteProblem, u: FunctionLike, q: Optional[float] = None) -> GridFunction:
    """
    u − c with ∫|u − c|^{q-2}(u − c) dx = 0.

    c is the mean for q = 2 and the root of a strictly monotone scalar
    equation otherwise.

    Raises:
        ConstantInput: u is constant.
    """
    q = dp.q if q is None else q
    vals = _coeffs(dp, u)
    at_points = dp.interp @ vals
    lo, hi = float(at_points.min()), float(at_points.max())
    if hi - lo <= 1e-14 * max(1.0, abs(hi)):
        raise ConstantInput("cannot project a constant function onto the constraint set")
    if q == 2.0:
        c = float(np.dot(dp.qweights, at_points)) / dp.area
    else:
        def h(c: float) -> float:
            d = at_points - c
            return float(np.dot(dp.qweights, _power(np.abs(d), q - 2.0) * d))

        c = brentq(h, lo, hi, xtol=1e-15 * max(1.0, hi - lo), rtol=4 * np.finfo(float).eps, maxiter=500)
    return GridFunction(dp.mesh, vals - c)


def rayleigh_quotient(dp: DiscreteProblem, u: FunctionLike) -> float:
    """‖u‖_X^p / ‖u‖_q^p; invariant under u ↦ t·u.

    Raises:
        ZeroFunction: ‖u‖_q = 0.
    """
    denom = lq_norm(dp, u)
    if denom == 0.0:
        raise ZeroFunction("Rayleigh quotient of a function with zero L_q norm")
    return (x_norm(dp, u) / denom) ** dp.p


def stiffness(dp: DiscreteProblem, coefficient: Optional[np.ndarray] = None) -> sparse.csr_matrix:
    """Σ_t ω_t c_t ∇φ_i·∇φ_j for a per-triangle coefficient c (default 1)."""
    c = dp.omega if coefficient is None else dp.omega * coefficient
    d = sparse.diags(c)
    return (dp.gx.T @ d @ dp.gx + dp.gy.T @ d @ dp.gy).tocsr()


def _solve_mean_zero(k: sparse.csr_matrix, load: np.ndarray, m: np.ndarray) -> np.ndarray:
    # [[K, m], [mᵀ, 0]] [w, λ] = [load, 0]
    col = sparse.csr_matrix(m[:, None])
    system = sparse.bmat([[k, col], [col.T, None]], format="csc")
    sol = spsolve(system, np.concatenate([load, [0.0]]))
    return np.asarray(sol[:-1])


def dual_norm(dp: DiscreteProblem, r: np.ndarray) -> float:
    """Lumped-mass dual norm sqrt(Σ r_i² / m_i)."""
    return float(np.sqrt(np.sum(r * r / dp.lumped)))


def _kkt(dp: DiscreteProblem, w: np.ndarray, load: np.ndarray) -> float:
    r = a_vector(dp, w) - load
    r = r - dp.lumped * (r.sum() / dp.lumped.sum())
    scale = dual_norm(dp, load)
    return dual_norm(dp, r) / scale if scale > 0 else dual_norm(dp, r)


def regularized_hessian(dp: DiscreteProblem, w: np.ndarray, eps: float) -> sparse.csr_matrix:
    """
    Hessian of (1/p)Σ ω_t (|∇w_t|² + ε)^{p/2}.

    Per triangle the 2×2 block is ω c (I + (p−2) g gᵀ/(|g|² + ε)) with
    c = (|g|² + ε)^{(p−2)/2}; its eigenvalues are at least c·min(1, p−1) > 0.
    """
    p = dp.p
    gx, gy = _gradients(dp, w)
    m = gx * gx + gy * gy + eps
    c = dp.omega * m ** ((p - 2.0) / 2.0)
    k = (p - 2.0) / m
    hxx = sparse.diags(c * (1.0 + k * gx * gx))
    hxy = sparse.diags(c * k * gx * gy)
    hyy = sparse.diags(c * (1.0 + k * gy * gy))
    return (
        dp.gx.T @ hxx @ dp.gx + dp.gx.T @ hxy @ dp.gy + dp.gy.T @ hxy @ dp.gx + dp.gy.T @ hyy @ dp.gy
    ).tocsr()


@dataclass(frozen=True)
class InnerSolution:
    w: GridFunction
    energy: float
    kkt: float
    iterations: int
    energy_trace: Tuple[float, ...]
    newton_steps: int = 0


def inner_solve(dp: DiscreteProblem, rhs: FunctionLike, cfg: SolverConfig = SolverConfig()) -> InnerSolution:
    """
    Minimize J(w) = (1/p)‖w‖_X^p − ⟨B(rhs), w⟩ over mean-zero nodal functions.

    Regularized Picard: each step solves the linear problem with coefficient
    (|∇w_k|² + ε_k)^{(p−2)/2}, ε_k = max(ε_min, ε_0·ρ^k), then a bounded line
    search on the true J picks the step. Once ε_k reaches ε_min or a Picard
    step no longer lowers J, the iteration switches to regularized Newton
    steps. Near the minimizer the J-decrease of a step drops below rounding,
    so a full Newton step is also taken when it lowers the KKT residual
    without raising J beyond rounding.

    The result always satisfies kkt ≤ cfg.kkt_tol.

    Raises:
        ZeroFunction: rhs vanishes after projection.
        NonconvergedInner: no step lowers J or the KKT residual while
            kkt > cfg.kkt_tol, or the step budget ran out.
    """
    p = dp.p
    f = project_constraint(dp, rhs, 2.0).values
    load = dp.mass @ f
    if not np.any(load):
        raise ZeroFunction("inner solve with a zero right-hand side")
    m = dp.lumped
    w = _solve_mean_zero(stiffness(dp), load, m)
    if p == 2.0:
        j = energy(dp, w, load)
        return InnerSolution(GridFunction(dp.mesh, w), j, _kkt(dp, w, load), 1, (j,))

    gx, gy = _gradients(dp, w)
    eps0 = cfg.eps_factor * float(np.mean(gx * gx + gy * gy)) or cfg.eps_factor
    j = energy(dp, w, load)
    trace = [j]
    kkt = _kkt(dp, w, load)
    tau_max = 2.0 / min(p - 1.0, 1.0)
    newton = False
    newton_steps = 0
    k = 0
    stalled = False
    for k in range(1, cfg.max_inner + 1):
        eps = max(cfg.eps_min, eps0 * cfg.eps_rate**k)
        newton = newton or eps == cfg.eps_min
        if newton:
            newton_steps += 1
            grad = a_vector(dp, w) - load
            direction = _solve_mean_zero(regularized_hessian(dp, w, eps), -grad, m)
        else:
            gx, gy = _gradients(dp, w)
            coef = (gx * gx + gy * gy + eps) ** ((p - 2.0) / 2.0)
            direction = _solve_mean_zero(stiffness(dp, coef), load, m) - w

        def along(tau: float) -> float:
            return energy(dp, w + tau * direction, load)

        j_full = along(1.0)
        kkt_full = _kkt(dp, w + direction, load)
        full_step = newton and kkt_full < kkt and j_full <= j + 1e-14 * abs(j)
        if full_step:
            tau, j_new = 1.0, j_full
        else:
            search = minimize_scalar(along, bounds=(0.0, tau_max), method="bounded",
                                     options={"xatol": 1e-10})
            tau = float(search.x) if search.fun < j_full else 1.0
            j_new = along(tau)
        decrease = j - j_new
        accepted = full_step or decrease > 0
        if accepted:
            w = w + tau * direction
            j = j_new
            trace.append(j)
            kkt = kkt_full if tau == 1.0 else _kkt(dp, w, load)
        decrease = max(decrease, 0.0)
        logger.debug("%s %d: J=%.17g ε=%.2e τ=%.4f kkt=%.3e",
                     "newton" if newton else "picard", k, j, eps, tau, kkt)
        small_step = decrease <= cfg.inner_tol * max(abs(j), 1e-300)
        if small_step and kkt <= cfg.kkt_tol:
            return InnerSolution(GridFunction(dp.mesh, w), j, kkt, k, tuple(trace), newton_steps)
        if not accepted:
            if newton:
                stalled = True
                break
            newton = True
        elif small_step:
            newton = True
    reason = "stalled" if stalled else "ran out of steps"
    raise NonconvergedInner(
        f"inner solve {reason} after {k} steps with KKT residual {kkt:.3e} "
        f"(kkt_tol={cfg.kkt_tol:g})",
        residual=kkt,
        suggestions=["Increase max_inner or relax kkt_tol"],
    )


@dataclass
class EigenResult:
    """Computed eigenpair with its iteration history."""

    lam: float
    u: GridFunction
    problem: ValidatedProblem
    mu_trace: List[float] = field(default_factory=list)
    x_norm_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    residual: float = math.nan
    constraint_residual: float = math.nan
    method: str = "inverse_iteration"
    zero_mode: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "lambda": self.lam,
            "iterations": self.iterations,
            "mu_trace": list(self.mu_trace),
            "x_norm_trace": list(self.x_norm_trace),
            "residual": self.residual,
            "constraint_residual": self.constraint_residual,
            "method": self.method,
            "mesh": self.u.mesh.describe(),
            "problem": self.problem.as_dict(),
        }
        if self.zero_mode is not None:
            out["zero_mode"] = self.zero_mode
        return out


def weak_residual(dp: DiscreteProblem, lam: float, u: FunctionLike, q: Optional[float] = None) -> float:
    """
    Relative dual-norm defect of the discrete weak form

        ⟨Au, φ_i⟩ = λ‖u‖_q^{p−q} ∫|u|^{q−2}u φ_i   for every nodal φ_i.
    """
    q = dp.q if q is None else q
    lhs = a_vector(dp, u)
    rhs = lam * lq_norm(dp, u, q) ** (dp.p - q) * bq_vector(dp, u, q)
    scale = dual_norm(dp, lhs)
    return dual_norm(dp, lhs - rhs) / scale if scale > 0 else dual_norm(dp, rhs)


def _normalized(dp: DiscreteProblem, u: FunctionLike, q: float) -> GridFunction:
    projected = project_constraint(dp, u, q)
    norm = lq_norm(dp, projected, q)
    if norm == 0.0:
        raise ZeroFunction("starting function vanishes after projection")
    return projected * (1.0 / norm)


def _finish(dp: DiscreteProblem, result: EigenResult, cfg: SolverConfig) -> EigenResult:
    result.residual = weak_residual(dp, result.lam, result.u)
    result.constraint_residual = constraint_residual(dp, result.u)
    if result.residual > cfg.weak_tol:
        warnings.warn(
            f"weak-form residual {result.residual:.3e} exceeds weak_tol={cfg.weak_tol:g}",
            UserWarning,
            stacklevel=3,
        )
    return result


def inverse_iteration(
    dp: DiscreteProblem, u0: Optional[FunctionLike] = None, cfg: SolverConfig = SolverConfig()
) -> EigenResult:
    """
    Nonlinear inverse iteration for q = 2.

    w = argmin J(·; φ_n), μ_n = ‖w‖_Y^{1−p}, φ_{n+1} = w/‖w‖_Y, so that
    A(φ_{n+1}) = μ_n B(φ_n) holds for every nodal test function. The sequence
    μ_n is nonincreasing; iteration stops when |μ_n − μ_{n−1}|/μ_n < cfg.tol.

    Raises:
        MaxIterations: cfg.max_outer iterations without convergence.
        CollapsedIterate: ‖w‖_Y fell below cfg.collapse_tol.
    """
    if dp.q != 2.0:
        raise ValidationError(
            f"inverse iteration needs q = 2 (got q={dp.q})",
            field="q",
            value=dp.q,
            suggestions=["Use rayleigh_descent for q ≠ 2"],
        )
    p = dp.p
    start = GridFunction.random(dp.mesh, cfg.seed) if u0 is None else u0
    phi = _normalized(dp, start, 2.0)
    mu_trace: List[float] = []
    x_trace: List[float] = []
    for n in range(1, cfg.max_outer + 1):
        w = inner_solve(dp, phi, cfg).w
        norm = lq_norm(dp, w, 2.0)
        if norm < cfg.collapse_tol:
            raise CollapsedIterate(f"‖w‖_Y = {norm:.3e} below collapse threshold at step {n}")
        mu = norm ** (1.0 - p)
        phi = w * (1.0 / norm)
        mu_trace.append(mu)
        x_trace.append(x_norm(dp, phi) ** p)
        logger.debug("outer %d: μ=%.17g", n, mu)
        if n > 1 and abs(mu_trace[-2] - mu) <= cfg.tol * mu:
            logger.info("inverse iteration converged: λ=%.12g after %d steps", mu, n)
            result = EigenResult(mu, phi, dp.problem, mu_trace, x_trace, n)
            return _finish(dp, result, cfg)
    raise MaxIterations(
        f"inverse iteration did not converge in {cfg.max_outer} steps "
        f"(last μ={mu_trace[-1]:.12g})",
        suggestions=["Increase max_outer or relax tol"],
    )


def rayleigh_descent(
    dp: DiscreteProblem, u0: Optional[FunctionLike] = None, cfg: SolverConfig = SolverConfig()
) -> EigenResult:
    """
    Minimize the Rayleigh quotient over the constraint set by L-BFGS.

    The optimizer works on unconstrained coefficients v and evaluates
    R(v − c(v)), where c(v) is the constraint shift of ``project_constraint``.
    """
    p, q = dp.p, dp.q
    start = GridFunction.random(dp.mesh, cfg.seed) if u0 is None else u0
    v0 = _normalized(dp, start, q).values

    def objective(v: np.ndarray) -> Tuple[float, np.ndarray]:
        u = project_constraint(dp, v, q).values
        lq = lq_norm(dp, u, q)
        r = (x_norm(dp, u) / lq) ** p
        grad_u = p / lq**p * (a_vector(dp, u) - r * lq ** (p - q) * bq_vector(dp, u, q))
        # chain rule through the shift c(v)
        at_points = dp.interp @ u
        sens = dp.interp.T @ (dp.qweights * _power(np.abs(at_points), q - 2.0))
        grad_v = grad_u - grad_u.sum() * sens / sens.sum()
        return r, grad_v

    trace: List[float] = []
    x_trace: List[float] = []

    def record(v: np.ndarray) -> None:
        u = _normalized(dp, v, q)
        trace.append(rayleigh_quotient(dp, u))
        x_trace.append(x_norm(dp, u) ** p)

    res = minimize(objective, v0, jac=True, method="L-BFGS-B", callback=record,
                   options={"maxiter": cfg.max_outer * 10, "ftol": cfg.tol * 1e-2, "gtol": 1e-12})
    if not res.success and res.nit >= cfg.max_outer * 10:
        raise MaxIterations(f"Rayleigh descent stopped after {res.nit} steps: {res.message}")
    u = _normalized(dp, res.x, q)
    lam = rayleigh_quotient(dp, u)
    if not trace or trace[-1] != lam:
        trace.append(lam)
        x_trace.append(x_norm(dp, u) ** p)
    logger.info("Rayleigh descent: λ=%.12g after %d steps", lam, res.nit)
    result = EigenResult(lam, u, dp.problem, trace, x_trace, int(res.nit), method="rayleigh_descent")
    return _finish(dp, result, cfg)


def direct_eigensolve_p2(dp: DiscreteProblem) -> EigenResult:
    """
    p = q = 2 oracle: second eigenpair of the pencil (K, M).

    The first eigenvalue is the Neumann zero mode with a constant eigenvector.

    Raises:
        SingularMass: M is not positive definite.
    """
    if dp.p != 2.0 or dp.q != 2.0:
        raise ValidationError(
            f"direct solve needs p = q = 2 (got p={dp.p}, q={dp.q})", field="p", value=dp.p
        )
    k = stiffness(dp).toarray()
    m = dp.mass.toarray()
    try:
        vals, vecs = scipy.linalg.eigh(k, m, subset_by_index=[0, 1])
    except np.linalg.LinAlgError as exc:
        raise SingularMass(f"mass matrix is not positive definite: {exc}") from exc
    lam = float(vals[1])
    u = GridFunction(dp.mesh, vecs[:, 1] / lq_norm(dp, vecs[:, 1], 2.0))
    result = EigenResult(lam, u, dp.problem, [lam], [x_norm(dp, u) ** 2], 1,
                         method="direct", zero_mode=float(vals[0]))
    result.residual = weak_residual(dp, lam, u)
    result.constraint_residual = constraint_residual(dp, u)
    return result


def monotone_operator_check(dp: DiscreteProblem, u: FunctionLike, v: FunctionLike) -> float:
    """⟨Au − Av, u − v⟩, nonnegative for a monotone A."""
    d = _coeffs(dp, u) - _coeffs(dp, v)
    return apply_A(dp, u, d) - apply_A(dp, v, d)


def gradient_check(
    dp: DiscreteProblem, u: FunctionLike, h: float = 1e-5, directions: int = 50, seed: int = 0
) -> float:
    """
    Largest relative gap between ⟨Au, δ⟩ and the central difference of
    (1/p)‖·‖_X^p at u over random nodal directions δ.

    The gap is measured against max(|⟨Au, δ⟩|, 1e-3·‖A(u)‖·‖δ‖).
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValidationError(f"h={h} outside [1e-7, 1e-3]", field="h", value=h)
    p = dp.p
    base = _coeffs(dp, u)
    grad = a_vector(dp, base)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(directions):
        delta = rng.standard_normal(base.size)
        plus = x_norm(dp, base + h * delta) ** p / p
        minus = x_norm(dp, base - h * delta) ** p / p
        fd = (plus - minus) / (2.0 * h)
        exact = float(np.dot(grad, delta))
        scale = max(abs(exact), 1e-3 * np.linalg.norm(grad) * np.linalg.norm(delta))
        worst = max(worst, abs(fd - exact) / scale)
    return worst
