"""
Parameter algebra for outward Hölder cusp domains.

Ω_γ = {0 < x_n < 1, 0 < x_i < x_n^{γ_i}},  γ = 1 + Σ γ_i  (γ = n: Lipschitz).

All types are frozen dataclasses and all functions are pure, so everything in
this module can be evaluated from several threads without coordination.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from .validation import (
    AlphaOutOfRange,
    CalculationError,
    EmptyWindow,
    GammaExponentError,
    InputValidator,
    MapExponentOutOfWindow,
    POutOfRange,
    QOutOfRange,
    ValidationError,
)

GAMMA_RTOL = 1e-12


def _sum_gamma(gamma_exps: Sequence[float]) -> float:
    return 1.0 + math.fsum(gamma_exps)


@dataclass(frozen=True)
class DomainSpec:
    """
    Cusp geometry: dimension n, Hölder exponents γ_i (i < n) and derived γ.

    ``gamma`` may be passed explicitly; it is then checked against the
    canonical sum 1 + Σγ_i (relative tolerance 1e-12).
    """

    n: int
    gamma_exps: Tuple[float, ...]
    gamma: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        n = InputValidator.integer_at_least(self.n, 2, "n")
        exps = tuple(InputValidator.finite(g, f"gamma_{i + 1}") for i, g in enumerate(self.gamma_exps))
        if len(exps) != n - 1:
            raise GammaExponentError(
                f"expected {n - 1} Hölder exponents for n={n}, got {len(exps)}",
                field="gamma_exps",
                value=self.gamma_exps,
            )
        derived = derive_gamma_from(exps)
        given = float(self.gamma)
        if not math.isnan(given) and abs(given - derived) > GAMMA_RTOL * abs(derived):
            raise GammaExponentError(
                f"gamma={given!r} disagrees with 1 + Σγ_i = {derived!r}",
                field="gamma",
                value=given,
                suggestions=["Omit gamma and let it be derived from the exponents"],
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "gamma_exps", exps)
        object.__setattr__(self, "gamma", derived)

    @classmethod
    def planar(cls, gamma1: float) -> "DomainSpec":
        """The 2-D cusp {0 < x_2 < 1, 0 < x_1 < x_2^{γ_1}}."""
        return cls(2, (float(gamma1),))

    @property
    def is_lipschitz(self) -> bool:
        return all(g == 1.0 for g in self.gamma_exps)

    @property
    def gamma1(self) -> float:
        return self.gamma_exps[0]


def derive_gamma_from(gamma_exps: Sequence[float]) -> float:
    for i, g in enumerate(gamma_exps):
        if g < 1:
            raise GammaExponentError(
                f"γ_{i + 1}={g} < 1 lies outside the Hölder class of outward cusps",
                field=f"gamma_{i + 1}",
                value=g,
                suggestions=["Use γ_i ≥ 1 (γ_i = 1 is the Lipschitz case)"],
            )
    return _sum_gamma(gamma_exps)


def derive_gamma(spec: DomainSpec) -> float:
    """γ = 1 + Σγ_i; always ≥ n."""
    return derive_gamma_from(spec.gamma_exps)


def sobolev_exponent(spec: DomainSpec, p: float, alpha: float) -> float:
    """p* = γp/(α+γ−p), defined for p < α + γ."""
    denom = alpha + spec.gamma - p
    if denom <= 0:
        raise POutOfRange(
            f"p={p} ≥ α+γ={alpha + spec.gamma}: the Sobolev exponent p* is undefined",
            interval=(1.0, alpha + spec.gamma),
            field="p",
            value=p,
        )
    p_star = spec.gamma * p / denom
    if not p_star > 0:
        raise CalculationError(f"nonpositive Sobolev exponent p*={p_star}")
    return p_star


def lipschitz_exponent(n: int, p: float) -> float:
    """p*_n = np/(n−p) for p < n, +∞ otherwise."""
    return n * p / (n - p) if p < n else math.inf


@dataclass(frozen=True)
class ValidatedProblem:
    """
    An admissible (p, q, α) triple together with its Sobolev exponent.

    ``bound_admissible`` is False for Lipschitz reference problems that only
    the eigensolver may consume (see ``admit_discrete_problem``).
    """

    p: float
    q: float
    alpha: float
    p_star: float
    bound_admissible: bool = True

    def as_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "alpha": self.alpha}


def alpha_interval(spec: DomainSpec, p: float) -> Tuple[float, float]:
    """(max{−n, p(n−γ)/n}, n(p−1))."""
    n = spec.n
    return max(-float(n), p * (n - spec.gamma) / n), n * (p - 1.0)


def validate_problem(spec: DomainSpec, p: float, q: float, alpha: float) -> ValidatedProblem:
    """
    Gate every computation on the admissibility chains.

    Checks, in order: 1 < p < α+γ; max{−n, p(n−γ)/n} < α < n(p−1); 1 < q < p*.
    The edge α = p(n−γ)/n > −n is admitted: there the transfer window
    collapses and ``transfer_window`` reports it as EmptyWindow.

    Raises:
        POutOfRange, AlphaOutOfRange, QOutOfRange with the admissible interval.
    """
    p = InputValidator.finite(p, "p")
    q = InputValidator.finite(q, "q")
    alpha = InputValidator.finite(alpha, "alpha")
    gamma = spec.gamma
    InputValidator.open_interval(p, 1.0, alpha + gamma, "p", POutOfRange, "needs 1 < p < α+γ")

    lo, hi = alpha_interval(spec, p)
    edge = lo > -spec.n and alpha == lo
    if not edge:
        InputValidator.open_interval(
            alpha, lo, hi, "alpha", AlphaOutOfRange, "needs max{-n, p(n-γ)/n} < α < n(p-1)"
        )
    elif not alpha < hi:
        raise AlphaOutOfRange(
            f"alpha={alpha} ≥ n(p-1)={hi}", interval=(lo, hi), field="alpha", value=alpha
        )
    # A_p range (−n, n(p−1)) is implied by the chain above
    p_star = sobolev_exponent(spec, p, alpha)
    InputValidator.open_interval(q, 1.0, p_star, "q", QOutOfRange, f"p*={p_star:.6g}")
    return ValidatedProblem(p=p, q=q, alpha=alpha, p_star=p_star)


def admit_discrete_problem(spec: DomainSpec, p: float, q: float, alpha: float) -> ValidatedProblem:
    """
    Admit a problem for the eigensolver.

    Problems passing ``validate_problem`` are returned unchanged. Otherwise,
    on Lipschitz domains (γ = n) the classical regime is admitted: α in the
    A_p range (−n, n(p−1)) and 1 < q < p*_n = np/(n−p). Such problems carry
    ``bound_admissible=False``.
    """
    try:
        return validate_problem(spec, p, q, alpha)
    except ValidationError:
        if spec.gamma != spec.n:
            raise
    p = InputValidator.open_interval(p, 1.0, math.inf, "p", POutOfRange)
    n = spec.n
    alpha = InputValidator.open_interval(
        alpha, -float(n), n * (p - 1.0), "alpha", AlphaOutOfRange, "A_p range of |x|^α"
    )
    p_star = lipschitz_exponent(n, p)
    q = InputValidator.open_interval(q, 1.0, p_star, "q", QOutOfRange, "Lipschitz exponent np/(n-p)")
    return ValidatedProblem(p=p, q=q, alpha=alpha, p_star=p_star, bound_admissible=False)


@dataclass(frozen=True)
class TransferWindow:
    """The open interval 𝓘 = (a_lo, a_hi) of admissible map exponents."""

    a_lo: float
    a_hi: float

    @property
    def empty(self) -> bool:
        return not self.a_lo < self.a_hi

    def contains(self, a: float) -> bool:
        return self.a_lo < a < self.a_hi

    def require_nonempty(self) -> "TransferWindow":
        if self.empty:
            raise EmptyWindow(self.a_lo, self.a_hi)
        return self


def transfer_window(
    problem: ValidatedProblem, spec: DomainSpec, strict: bool = True
) -> TransferWindow:
    """
    𝓘 = (max{0, (n−p)/(α+γ−p)}, min{n/γ, p(n−1)/(α+γ−p)}).

    Args:
        strict: raise EmptyWindow instead of returning an empty window.
    """
    require_bound_admissible(problem)
    n, gamma, p = spec.n, spec.gamma, problem.p
    x = problem.alpha + gamma - p
    a_lo = max(0.0, (n - p) / x)
    a_hi = min(n / gamma, p * (n - 1) / x)
    window = TransferWindow(a_lo, a_hi)
    if strict:
        window.require_nonempty()
    return window


def s_upper(a: float, problem: ValidatedProblem, spec: DomainSpec) -> float:
    """
    t = np/(a(α+γ−p)+p), the supremum of admissible s for the map exponent a.

    Raises:
        MapExponentOutOfWindow: a outside 𝓘.
    """
    window = transfer_window(problem, spec, strict=False)
    if not window.contains(a):
        raise MapExponentOutOfWindow(
            f"a={a} outside the transfer window", interval=(window.a_lo, window.a_hi), field="a", value=a
        )
    t = s_upper_unchecked(a, problem.p, problem.alpha, spec)
    if not 1.0 < t < min(problem.p, spec.n):
        raise CalculationError(f"t={t} violates 1 < t < min(p, n) for a={a}")
    return t


def s_upper_unchecked(a: float, p: float, alpha: float, spec: DomainSpec) -> float:
    return spec.n * p / (a * (alpha + spec.gamma - p) + p)


def require_bound_admissible(problem: ValidatedProblem) -> None:
    if not problem.bound_admissible:
        raise ValidationError(
            "problem admitted only in the Lipschitz reference regime; "
            "the composition bounds need 1 < p < α+γ and the full α chain",
            field="problem",
            value=problem,
            suggestions=["Use validate_problem to check the bound hypotheses"],
        )


def describe(problem: ValidatedProblem, spec: DomainSpec, window: Optional[TransferWindow] = None) -> str:
    """One-line human summary used by the CLI."""
    text = (
        f"n={spec.n} γ={spec.gamma:g} p={problem.p:g} q={problem.q:g} "
        f"α={problem.alpha:g} p*={problem.p_star:g}"
    )
    if window is not None:
        text += f" 𝓘=({window.a_lo:.6g}, {window.a_hi:.6g})"
    return text
