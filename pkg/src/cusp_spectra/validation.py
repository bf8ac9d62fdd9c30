"""
Error hierarchy and input validation for cusp-spectra.

Every error carries a machine-readable ``error_code``, a list of suggestions
printed under the message, and an ``exit_code`` the CLI maps to the process
exit status:

    2  invalid parameters or configuration
    3  empty transfer window / empty feasible set
    4  numerical failure or non-convergence
    5  parameter sweep without a single feasible point
"""
from __future__ import annotations

import math
from typing import Any, List, Optional, Sequence, Tuple, Type

import numpy as np


class CuspSpectraError(Exception):
    """Base exception class for cusp-spectra errors."""

    exit_code = 1

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        suggestions: Optional[List[str]] = None,
    ):
        """
        Initialize the error.

        Args:
            message: Human-readable error description
            error_code: Unique error identifier for programmatic handling
            suggestions: List of suggested fixes
        """
        super().__init__(message)
        self.error_code = error_code or "CUSP_SPECTRA_ERROR"
        self.suggestions = suggestions or []
        self.message = message

    def __str__(self) -> str:
        """Format error with suggestions."""
        result = f"{self.message}"
        if self.suggestions:
            result += "\n\nSuggestions:\n" + "\n".join(f"  • {s}" for s in self.suggestions)
        return result


class ValidationError(CuspSpectraError):
    """Raised when input validation fails."""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None, value: Any = None, **kwargs: Any):
        """
        Initialize validation error.

        Args:
            message: Error description
            field: Name of the field that failed validation
            value: The invalid value that caused the error
        """
        kwargs.setdefault("error_code", "VALIDATION_ERROR")
        super().__init__(message, **kwargs)
        self.field = field
        self.value = value


class AdmissibleRangeError(ValidationError):
    """A parameter left its admissible open interval."""

    chain = "parameter"

    def __init__(
        self,
        message: str,
        interval: Tuple[float, float],
        field: Optional[str] = None,
        value: Any = None,
        **kwargs: Any,
    ):
        lo, hi = interval
        kwargs.setdefault("error_code", f"{self.chain.upper()}_OUT_OF_RANGE")
        kwargs.setdefault("suggestions", [f"admissible {field or self.chain} ∈ {format_interval(lo, hi)}"])
        super().__init__(message, field=field, value=value, **kwargs)
        self.interval = (float(lo), float(hi))


class AlphaOutOfRange(AdmissibleRangeError):
    """The weight power alpha violates max{-n, p(n-γ)/n} < α < n(p-1)."""

    chain = "alpha"


class POutOfRange(AdmissibleRangeError):
    """The exponent p violates 1 < p < α + γ."""

    chain = "p"


class QOutOfRange(AdmissibleRangeError):
    """The exponent q violates 1 < q < p*."""

    chain = "q"


class GammaExponentError(ValidationError):
    """A Hölder exponent γ_i < 1 or an inconsistent derived γ."""


class DomainPointError(ValidationError):
    """A point outside the reference domain handed to the cusp mapping."""


class MapExponentOutOfWindow(AdmissibleRangeError):
    """The map exponent a lies outside the transfer window."""

    chain = "a"


class InfeasibleParams(ValidationError):
    """An (a, s, r) point failing one or more strict feasibility inequalities."""

    def __init__(self, message: str, violations: Sequence[str], **kwargs: Any):
        kwargs.setdefault("error_code", "INFEASIBLE_PARAMS")
        kwargs.setdefault("suggestions", list(violations))
        super().__init__(message, **kwargs)
        self.violations = list(violations)


class InfeasibleQR(ValidationError):
    """The (r, q) pair gives a divergent Jacobian integral (q ≥ aγr/n)."""


class DenominatorNonpositive(ValidationError):
    """np − s(a(α+γ−p)+p) ≤ 0: the K bracket has no finite value."""


class NonintegrableSingularity(ValidationError):
    """The tip exponent of an integrand is ≤ −1."""


class StrategyDomainMismatch(ValidationError):
    """A Poincaré provider strategy was requested outside its domain of validity."""


class ConfigError(ValidationError):
    """Malformed or unknown run configuration entries."""


class EmptyWindow(CuspSpectraError):
    """No admissible map exponent: the transfer window is empty."""

    exit_code = 3

    def __init__(self, a_lo: float, a_hi: float, **kwargs: Any):
        kwargs.setdefault("error_code", "EMPTY_WINDOW")
        kwargs.setdefault(
            "suggestions",
            [
                "Increase alpha above p(n-γ)/n to open the window",
                "Use a sharper cusp (larger gamma1)",
            ],
        )
        super().__init__(f"empty transfer window (a_lo={_fmt(a_lo)}, a_hi={_fmt(a_hi)})", **kwargs)
        self.a_lo = float(a_lo)
        self.a_hi = float(a_hi)


class EmptyFeasibleSet(CuspSpectraError):
    """No (a, s, r) grid point survives the strict feasibility filter."""

    exit_code = 3


class NoFeasiblePoint(CuspSpectraError):
    """Every point of a parameter sweep was infeasible."""

    exit_code = 5


class CalculationError(CuspSpectraError):
    """Raised when a numerical computation fails."""

    exit_code = 4


class QuadratureNonconvergence(CalculationError):
    """Successive refinements kept disagreeing beyond the tolerance."""


class NonconvergedInner(CalculationError):
    """The regularized Picard solve stopped before meeting its tolerances."""

    def __init__(self, message: str, residual: float, **kwargs: Any):
        kwargs.setdefault("error_code", "NONCONVERGED_INNER")
        super().__init__(message, **kwargs)
        self.residual = float(residual)


class MaxIterations(CalculationError):
    """An outer iteration exhausted its iteration budget."""


class CollapsedIterate(CalculationError):
    """The Y-norm of an iterate fell below the collapse threshold."""


class SingularMass(CalculationError):
    """The mass matrix is not positive definite."""


class DegenerateTriangle(CalculationError):
    """Mesh construction produced a triangle with nonpositive area."""


class NonfiniteIntegrand(CalculationError):
    """An integrand evaluated to inf or nan at a quadrature point."""


class ConstantInput(CalculationError):
    """A constant function was handed to an operation that needs variation."""


class ZeroFunction(CalculationError):
    """A function with zero L_q norm was handed to the Rayleigh quotient."""


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "∞" if x > 0 else "-∞"
    return f"{x:.6g}"


def format_interval(lo: float, hi: float) -> str:
    """Render an open interval like ``(1, 6)``."""
    return f"({_fmt(lo)}, {_fmt(hi)})"


class InputValidator:
    """
    Shared checks used by every module before computing anything.

    All methods raise subclasses of ValidationError with suggestions,
    and return the normalized value on success.
    """

    @classmethod
    def finite(cls, value: Any, field: str) -> float:
        """Validate a finite real scalar."""
        try:
            x = float(value)
        except (TypeError, ValueError):
            raise ValidationError(
                f"Invalid {field}: expected a real number, got {type(value).__name__}",
                field=field,
                value=value,
                suggestions=[f"Pass {field} as a float, e.g. {field}=2.0"],
            )
        if not math.isfinite(x):
            raise ValidationError(f"Invalid {field}: {x} is not finite", field=field, value=value)
        return x

    @classmethod
    def positive(cls, value: Any, field: str) -> float:
        """Validate a strictly positive real scalar."""
        x = cls.finite(value, field)
        if x <= 0:
            raise ValidationError(
                f"Invalid {field}: {x} must be > 0",
                field=field,
                value=value,
                suggestions=[f"Use a positive {field}"],
            )
        return x

    @classmethod
    def tolerance(cls, value: Any, field: str) -> float:
        """Validate a tolerance in (0, 1)."""
        x = cls.positive(value, field)
        if x >= 1:
            raise ValidationError(
                f"Invalid {field}: tolerance {x} must lie in (0, 1)",
                field=field,
                value=value,
                suggestions=[f"Typical values: {field}=1e-8 … 1e-12"],
            )
        return x

    @classmethod
    def integer_at_least(cls, value: Any, minimum: int, field: str) -> int:
        """Validate an integer ≥ minimum."""
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                raise ValidationError(
                    f"Invalid {field}: expected an integer, got {value!r}",
                    field=field,
                    value=value,
                )
        if value < minimum:
            raise ValidationError(
                f"Invalid {field}: {value} must be ≥ {minimum}",
                field=field,
                value=value,
                suggestions=[f"Use {field} ≥ {minimum}"],
            )
        return int(value)

    @classmethod
    def open_interval(
        cls,
        value: Any,
        lo: float,
        hi: float,
        field: str,
        error_cls: Type[AdmissibleRangeError] = AdmissibleRangeError,
        detail: str = "",
    ) -> float:
        """Validate lo < value < hi with no epsilon padding."""
        x = cls.finite(value, field)
        if not (lo < x < hi):
            message = f"{field}={_fmt(x)} outside admissible interval {format_interval(lo, hi)}"
            if detail:
                message += f" ({detail})"
            raise error_cls(message, interval=(lo, hi), field=field, value=value)
        return x

    @classmethod
    def finite_array(cls, values: Any, field: str) -> np.ndarray:
        """Validate an array with only finite entries."""
        arr = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NonfiniteIntegrand(
                f"{field} contains non-finite values",
                error_code="NONFINITE",
                suggestions=["Check that no quadrature point sits on the cusp tip"],
            )
        return arr
