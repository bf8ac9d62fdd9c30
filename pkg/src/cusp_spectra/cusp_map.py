"""
The power map φ_a from the reference simplex onto an outward cusp.

    φ_a(x) = ((x_1/x_n)·x_n^{aγ_1}, …, (x_{n-1}/x_n)·x_n^{aγ_{n-1}}, x_n^a)

maps Ω_n = {0 < x_i < x_n < 1} onto Ω_γ. Besides pointwise evaluation this
module provides the two transfer constants carried by the map:

    K_{p,s}  bound of the composition operator f ↦ f∘φ_a from the weighted
             gradient space on Ω_γ to the unweighted one on Ω_n
    M_{r,q}  the Jacobian integral moving L_r norms back to L_q

each in closed form (from the |Dφ_a| and |x|^α envelopes) and by graded
quadrature in the plane.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from .params import DomainSpec, ValidatedProblem
from .quadrature import QuadConfig, integrate_cusp, integrate_triangle
from .validation import (
    AdmissibleRangeError,
    DenominatorNonpositive,
    DomainPointError,
    InfeasibleQR,
    InputValidator,
    NonintegrableSingularity,
    ValidationError,
)

logger = logging.getLogger(__name__)

PointLike = Union[Iterable[float], np.ndarray]

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"


@dataclass(frozen=True)
class CuspMapping:
    """φ_a onto the cusp described by ``spec``."""

    a: float
    spec: DomainSpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", InputValidator.positive(self.a, "a"))

    @property
    def is_identity(self) -> bool:
        return self.a == 1.0 and self.spec.is_lipschitz

    def distortion_factor(self) -> float:
        """D = sqrt(Σ(aγ_i − 1)² + n − 1 + a²)."""
        a = self.a
        return math.sqrt(
            math.fsum((a * g - 1.0) ** 2 for g in self.spec.gamma_exps) + self.spec.n - 1 + a * a
        )


@dataclass(frozen=True)
class TransferConstants:
    """K_{p,s}, M_{r,q} and the weight envelope (c_a, C_a) for one map exponent."""

    k_ps: float
    m_rq: float
    c_a: float
    c_a_upper: float
    method: str = CLOSED_FORM

    def __post_init__(self) -> None:
        if self.method not in (CLOSED_FORM, QUADRATURE):
            raise ValidationError(f"unknown method {self.method!r}", field="method", value=self.method)
        if self.c_a > self.c_a_upper:
            raise ValidationError(
                f"weight envelope inverted: c_a={self.c_a} > C_a={self.c_a_upper}", field="c_a"
            )


def _as_points(m: CuspMapping, x: PointLike) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    n = m.spec.n
    if pts.shape[-1:] != (n,):
        raise DomainPointError(
            f"expected points with {n} coordinates, got shape {pts.shape}", field="x", value=x
        )
    xn = pts[..., -1]
    lateral = pts[..., :-1]
    # closure of Ω_n with the tip removed
    inside = (xn > 0.0) & (xn <= 1.0) & np.all((lateral >= 0.0) & (lateral <= xn[..., None]), axis=-1)
    if not np.all(inside):
        bad = pts[~inside] if pts.ndim > 1 else pts
        raise DomainPointError(
            "point(s) outside the reference domain 0 ≤ x_i ≤ x_n ≤ 1, x_n > 0: "
            f"{np.atleast_2d(bad)[0]}",
            field="x",
            value=x,
            suggestions=["The cusp tip x_n = 0 is excluded; sample strictly inside"],
        )
    return pts


def map_point(m: CuspMapping, x: PointLike) -> np.ndarray:
    """y = φ_a(x); vectorized over leading axes."""
    pts = _as_points(m, x)
    xn = pts[..., -1:]
    g = np.asarray(m.spec.gamma_exps)
    lateral = pts[..., :-1] * xn ** (m.a * g - 1.0)
    return np.concatenate([lateral, xn**m.a], axis=-1)


def differential(m: CuspMapping, x: PointLike) -> np.ndarray:
    """Full Jacobian matrix Dφ_a(x) with shape (..., n, n)."""
    pts = _as_points(m, x)
    n, a = m.spec.n, m.a
    xn = pts[..., -1]
    out = np.zeros(pts.shape + (n,))
    for i, g in enumerate(m.spec.gamma_exps):
        out[..., i, i] = xn ** (a * g - 1.0)
        out[..., i, n - 1] = pts[..., i] * (a * g - 1.0) * xn ** (a * g - 2.0)
    out[..., n - 1, n - 1] = a * xn ** (a - 1.0)
    return out


def jacobian(m: CuspMapping, x: PointLike) -> np.ndarray:
    """J(x, φ_a) = a·x_n^{aγ−n} > 0."""
    pts = _as_points(m, x)
    return m.a * pts[..., -1] ** (m.a * m.spec.gamma - m.spec.n)


def diff_norm_bound(m: CuspMapping, x: PointLike) -> np.ndarray:
    """Envelope |Dφ_a(x)| ≤ x_n^{a−1}·D."""
    pts = _as_points(m, x)
    return pts[..., -1] ** (m.a - 1.0) * m.distortion_factor()


def weight_envelope(a: float, alpha: float, n: int) -> Tuple[float, float]:
    """
    (c_a, C_a) with c_a·x_n^{aα} ≤ |φ_a(x)|^α ≤ C_a·x_n^{aα} on Ω_n.

    Uses x_n^a ≤ |φ_a(x)| ≤ √n·x_n^a.
    """
    InputValidator.positive(a, "a")
    scale = float(n) ** (alpha / 2.0)
    return (1.0, scale) if alpha >= 0 else (scale, 1.0)


def kps_denominator(a: float, s: float, problem: ValidatedProblem, spec: DomainSpec) -> float:
    """np − s(a(α+γ−p)+p); positive exactly when the K integral converges."""
    p = problem.p
    return spec.n * p - s * (a * (problem.alpha + spec.gamma - p) + p)


def _check_kps_args(a: float, s: float, problem: ValidatedProblem, spec: DomainSpec) -> float:
    InputValidator.positive(a, "a")
    InputValidator.open_interval(s, 1.0, problem.p, "s", AdmissibleRangeError, "needs 1 < s < p")
    return kps_denominator(a, s, problem, spec)


def kps_closed_form(a: float, s: float, problem: ValidatedProblem, spec: DomainSpec) -> float:
    """
    Closed-form upper bound for K_{p,s}(φ_a; Ω_n).

        D/(a·c_a)^{1/p} · ((p−s)/(np − s(a(α+γ−p)+p)))^{(p−s)/(ps)}

    Only the integrability condition np − s(a(α+γ−p)+p) > 0 is required,
    so the identity map a = 1 can be evaluated as well.

    Raises:
        DenominatorNonpositive: the integrability condition fails.
    """
    p = problem.p
    denom = _check_kps_args(a, s, problem, spec)
    if denom <= 0:
        raise DenominatorNonpositive(
            f"np - s(a(α+γ-p)+p) = {denom:.6g} ≤ 0 at a={a}, s={s}",
            field="s",
            value=s,
            suggestions=[f"Use s < {spec.n * p / (a * (problem.alpha + spec.gamma - p) + p):.6g}"],
        )
    c_a, _ = weight_envelope(a, problem.alpha, spec.n)
    d = CuspMapping(a, spec).distortion_factor()
    return d / (a * c_a) ** (1.0 / p) * ((p - s) / denom) ** ((p - s) / (p * s))


def simplified_threshold(a: float, problem: ValidatedProblem, spec: DomainSpec) -> float:
    """Below this s the bracket of the K closed form is at most one."""
    p = problem.p
    return (spec.n - 1) * p / (a * (problem.alpha + spec.gamma - p) + p + 1.0)


def kps_simplified_bound(a: float, problem: ValidatedProblem, spec: DomainSpec) -> float:
    """D/(a·c_a)^{1/p}, valid for s below ``simplified_threshold``."""
    c_a, _ = weight_envelope(a, problem.alpha, spec.n)
    return CuspMapping(a, spec).distortion_factor() / (a * c_a) ** (1.0 / problem.p)


def _require_planar(spec: DomainSpec, what: str) -> None:
    if spec.n != 2:
        raise ValidationError(
            f"{what} is implemented for n = 2 only (got n={spec.n})",
            field="n",
            value=spec.n,
            suggestions=["Use the closed form for n > 2"],
        )


def kps_quadrature(
    a: float,
    s: float,
    problem: ValidatedProblem,
    spec: DomainSpec,
    quad_cfg: QuadConfig = QuadConfig(),
) -> float:
    """
    K_{p,s} from its defining integral with the exact weight |φ_a(x)|^α.

    The numerator keeps the |Dφ_a| envelope, so the value never exceeds
    ``kps_closed_form``.

    Raises:
        NonintegrableSingularity: np − s(a(α+γ−p)+p) ≤ 0.
    """
    _require_planar(spec, "kps_quadrature")
    p, alpha = problem.p, problem.alpha
    denom = _check_kps_args(a, s, problem, spec)
    if denom <= 0:
        raise NonintegrableSingularity(
            f"K integrand not integrable at the tip for a={a}, s={s} (np - s(a(α+γ-p)+p) = {denom:.6g})",
            field="s",
            value=s,
        )
    m = CuspMapping(a, spec)
    d = m.distortion_factor()
    g1, gamma = spec.gamma1, spec.gamma
    e = s / (p - s)
    tip = e * (p * (a - 1.0) - a * gamma + 2.0 - a * alpha)

    def integrand(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        y1 = x1 * x2 ** (a * g1 - 1.0)
        y2 = x2**a
        weight = (y1 * y1 + y2 * y2) ** (alpha / 2.0)
        distortion = d**p * x2 ** (p * (a - 1.0))
        jac = a * x2 ** (a * gamma - 2.0)
        return (distortion / (jac * weight)) ** e

    integral = integrate_triangle(integrand, tip, quad_cfg)
    return integral ** ((p - s) / (p * s))


def _check_mrq_args(a: float, r: float, q: float, spec: DomainSpec) -> float:
    InputValidator.positive(a, "a")
    InputValidator.open_interval(q, 1.0, math.inf, "q", AdmissibleRangeError)
    InputValidator.finite(r, "r")
    bound = a * spec.gamma * r / spec.n
    if not q < bound:
        raise InfeasibleQR(
            f"q={q} ≥ aγr/n={bound:.6g}: the Jacobian integral diverges",
            field="q",
            value=q,
            suggestions=[f"Use r > nq/(aγ) = {spec.n * q / (a * spec.gamma):.6g}"],
        )
    return a * spec.gamma * r - spec.n * q


def mrq_closed_form(a: float, r: float, q: float, spec: DomainSpec) -> float:
    """
    M_{r,q}(Ω_n) = a^{1/q}·((r−q)/(aγr − nq))^{(r−q)/(rq)}.

    Raises:
        InfeasibleQR: q ≥ aγr/n.
    """
    denom = _check_mrq_args(a, r, q, spec)
    return a ** (1.0 / q) * ((r - q) / denom) ** ((r - q) / (r * q))


def mrq_quadrature(
    a: float, r: float, q: float, spec: DomainSpec, quad_cfg: QuadConfig = QuadConfig()
) -> float:
    """M_{r,q} = (∫_{Ω_2} J^{r/(r−q)} dx)^{(r−q)/(rq)} by graded quadrature."""
    _require_planar(spec, "mrq_quadrature")
    _check_mrq_args(a, r, q, spec)
    power = r / (r - q)
    exponent = (a * spec.gamma - 2.0) * power

    def integrand(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        values = (a * x2 ** (a * spec.gamma - 2.0)) ** power
        return np.broadcast_to(values, np.broadcast(x1, x2).shape)

    integral = integrate_triangle(integrand, exponent, quad_cfg)
    return integral ** ((r - q) / (r * q))


def transfer_constants(
    a: float,
    s: float,
    r: float,
    problem: ValidatedProblem,
    spec: DomainSpec,
    method: str = CLOSED_FORM,
    quad_cfg: Optional[QuadConfig] = None,
) -> TransferConstants:
    """Both transfer constants for one (a, s, r) point."""
    c_a, c_upper = weight_envelope(a, problem.alpha, spec.n)
    if method == QUADRATURE:
        cfg = quad_cfg or QuadConfig()
        k = kps_quadrature(a, s, problem, spec, cfg)
        m = mrq_quadrature(a, r, problem.q, spec, cfg)
    else:
        k = kps_closed_form(a, s, problem, spec)
        m = mrq_closed_form(a, r, problem.q, spec)
    return TransferConstants(k_ps=k, m_rq=m, c_a=c_a, c_a_upper=c_upper, method=method)


@dataclass(frozen=True)
class Polynomial2D:
    """f(y) = Σ c_ij·y1^i·y2^j with exact gradient."""

    terms: Tuple[Tuple[int, int, float], ...] = field(default_factory=tuple)

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int = 3) -> "Polynomial2D":
        terms = tuple(
            (i, j, float(rng.uniform(-1.0, 1.0)))
            for i in range(degree + 1)
            for j in range(degree + 1 - i)
            if i + j > 0
        )
        return cls(terms)

    def __call__(self, y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
        out = np.zeros(np.broadcast(y1, y2).shape)
        for i, j, c in self.terms:
            out = out + c * y1**i * y2**j
        return out

    def gradient(self, y1: np.ndarray, y2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        shape = np.broadcast(y1, y2).shape
        d1, d2 = np.zeros(shape), np.zeros(shape)
        for i, j, c in self.terms:
            if i:
                d1 = d1 + c * i * y1 ** (i - 1) * y2**j
            if j:
                d2 = d2 + c * j * y1**i * y2 ** (j - 1)
        return d1, d2


@dataclass(frozen=True)
class CompositionReport:
    lhs: float
    rhs: float
    k_ps: float
    holds: bool


def composition_inequality_check(
    f: Polynomial2D,
    a: float,
    s: float,
    problem: ValidatedProblem,
    spec: DomainSpec,
    quad_cfg: QuadConfig = QuadConfig(),
    tol: float = 1e-9,
) -> CompositionReport:
    """
    Compare ‖∇(f∘φ_a)‖_{L_s(Ω_2)} with K_{p,s}·‖∇f‖_{L_p(Ω_γ, |x|^α)}.

    K is the closed form, which dominates the exact composition constant.
    """
    _require_planar(spec, "composition_inequality_check")
    p, alpha = problem.p, problem.alpha
    k = kps_closed_form(a, s, problem, spec)
    g1 = spec.gamma1

    def pulled_back(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        y1 = x1 * x2 ** (a * g1 - 1.0)
        y2 = x2**a
        f1, f2 = f.gradient(y1, y2)
        # chain rule: ∇(f∘φ) = Dφᵀ ∇f(φ)
        d1 = f1 * x2 ** (a * g1 - 1.0)
        d2 = f1 * x1 * (a * g1 - 1.0) * x2 ** (a * g1 - 2.0) + f2 * a * x2 ** (a - 1.0)
        return np.hypot(d1, d2) ** s

    def weighted(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
        f1, f2 = f.gradient(y1, y2)
        return np.hypot(f1, f2) ** p * (y1 * y1 + y2 * y2) ** (alpha / 2.0)

    lhs = integrate_triangle(pulled_back, s * min(a - 1.0, 0.0), quad_cfg) ** (1.0 / s)
    rhs = k * integrate_cusp(weighted, g1, alpha, quad_cfg) ** (1.0 / p)
    holds = lhs <= rhs * (1.0 + tol)
    logger.debug("composition check a=%g s=%g: lhs=%.6g rhs=%.6g", a, s, lhs, rhs)
    return CompositionReport(lhs=lhs, rhs=rhs, k_ps=k, holds=bool(holds))
