"""
Graded quadrature for integrands with a power singularity at the cusp tip.

Every integrand met by the composition constants behaves like t^β·g(t) near
t = 0 with g bounded. The unit interval is cut into geometric cells
[2^{-k-1}, 2^{-k}] integrated with Gauss–Legendre, and the last cell [0, 2^{-L}]
is integrated with Gauss–Jacobi against the exact weight t^β, so no node ever
sits on the tip.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from .validation import InputValidator, NonintegrableSingularity, QuadratureNonconvergence

logger = logging.getLogger(__name__)

ArrayFn1D = Callable[[np.ndarray], np.ndarray]
ArrayFn2D = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadConfig:
    """Refinement controls shared by every graded integral."""

    rtol: float = 1e-7
    max_levels: int = 10
    points: int = 8
    inner_points: int = 16
    cells_per_level: int = 6

    def __post_init__(self) -> None:
        InputValidator.tolerance(self.rtol, "rtol")
        InputValidator.integer_at_least(self.max_levels, 2, "max_levels")
        InputValidator.integer_at_least(self.points, 2, "points")
        InputValidator.integer_at_least(self.inner_points, 2, "inner_points")
        InputValidator.integer_at_least(self.cells_per_level, 1, "cells_per_level")

    def to_dict(self) -> dict:
        return {
            "rtol": self.rtol,
            "max_levels": self.max_levels,
            "points": self.points,
            "inner_points": self.inner_points,
            "cells_per_level": self.cells_per_level,
        }


@lru_cache(maxsize=64)
def _unit_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=256)
def _unit_jacobi(n: int, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    # weight (1+x)^β on [-1, 1] -> t^β on [0, 1]
    x, w = roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w / 2.0 ** (beta + 1.0)


def graded_rule(beta: float, cells: int, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights with Σ w_i g(t_i) ≈ ∫_0^1 t^β g(t) dt.

    Raises:
        NonintegrableSingularity: β ≤ −1.
    """
    if not beta > -1.0:
        raise NonintegrableSingularity(
            f"tip exponent {beta:.6g} ≤ -1: integrand is not integrable at the cusp tip",
            field="beta",
            value=beta,
            suggestions=["Check the integrability condition on (a, p, s) or (a, r, q)"],
        )
    gx, gw = _unit_legendre(points)
    nodes = []
    weights = []
    for k in range(cells):
        lo, hi = 2.0 ** (-k - 1), 2.0 ** (-k)
        t = lo + (hi - lo) * gx
        nodes.append(t)
        # g is evaluated against t^β, so fold the power into the weight
        weights.append((hi - lo) * gw * t**beta)
    h = 2.0 ** (-cells)
    jx, jw = _unit_jacobi(points, float(beta))
    nodes.append(h * jx)
    weights.append(h ** (beta + 1.0) * jw)
    return np.concatenate(nodes), np.concatenate(weights)


def _refine(evaluate: Callable[[int], float], cfg: QuadConfig, what: str) -> float:
    previous = evaluate(1)
    change = math.inf
    for level in range(2, cfg.max_levels + 1):
        current = evaluate(level)
        if not math.isfinite(current):
            raise QuadratureNonconvergence(f"{what}: non-finite value at level {level}")
        change = abs(current - previous)
        if change <= cfg.rtol * abs(current):
            logger.debug("%s converged at level %d: %.17g (change %.3g)", what, level, current, change)
            return current
        previous = current
    raise QuadratureNonconvergence(
        f"{what}: relative change {change / max(abs(previous), 1e-300):.3g} "
        f"after {cfg.max_levels} levels exceeds rtol={cfg.rtol:g}",
        suggestions=["Increase max_levels or relax rtol in the quadrature config"],
    )


def _level_sizes(level: int, cfg: QuadConfig) -> Tuple[int, int, int]:
    cells = cfg.cells_per_level * level
    points = cfg.points + 2 * (level - 1)
    inner = cfg.inner_points + 4 * (level - 1)
    return cells, points, inner


def graded_power_integral(g: ArrayFn1D, beta: float, cfg: QuadConfig = QuadConfig()) -> float:
    """∫_0^1 t^β g(t) dt for g bounded near 0."""

    def evaluate(level: int) -> float:
        cells, points, _ = _level_sizes(level, cfg)
        t, w = graded_rule(beta, cells, points)
        values = InputValidator.finite_array(g(t), "integrand")
        return float(np.dot(w, values))

    return _refine(evaluate, cfg, "graded integral")


def _fibered_integral(
    integrand: ArrayFn2D,
    tip_exponent: float,
    fiber_power: float,
    cfg: QuadConfig,
    what: str,
) -> float:
    # {0 < t < 1, 0 < x1 < t^fiber_power}, x1 = v·t^fiber_power
    beta = tip_exponent + fiber_power

    def evaluate(level: int) -> float:
        cells, points, inner = _level_sizes(level, cfg)
        t, wt = graded_rule(beta, cells, points)
        v, wv = _unit_legendre(inner)
        T, V = np.meshgrid(t, v, indexing="ij")
        values = integrand(V * T**fiber_power, T) * T ** (-tip_exponent)
        values = InputValidator.finite_array(values, "integrand")
        return float(wt @ values @ wv)

    return _refine(evaluate, cfg, what)


def integrate_triangle(
    integrand: ArrayFn2D, tip_exponent: float, cfg: QuadConfig = QuadConfig()
) -> float:
    """
    ∫ over Ω_2 = {0 < x1 < x2 < 1} of integrand(x1, x2).

    Args:
        integrand: vectorized f(x1, x2)
        tip_exponent: e with f = O(x2^e) as x2 → 0 (needs e > −2)
    """
    return _fibered_integral(integrand, tip_exponent, 1.0, cfg, "triangle integral")


def integrate_cusp(
    integrand: ArrayFn2D, gamma1: float, tip_exponent: float, cfg: QuadConfig = QuadConfig()
) -> float:
    """∫ over {0 < y2 < 1, 0 < y1 < y2^γ1} of integrand(y1, y2); f = O(y2^e) at the tip."""
    return _fibered_integral(integrand, tip_exponent, float(gamma1), cfg, "cusp integral")
