"""
Tests for the power map onto the cusp, its transfer constants and the graded
quadrature behind them.
"""
import math

import numpy as np
import pytest

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))
from cusp_spectra.cusp_map import (
    QUADRATURE,
    CuspMapping,
    Polynomial2D,
    composition_inequality_check,
    differential,
    diff_norm_bound,
    jacobian,
    kps_closed_form,
    kps_quadrature,
    kps_simplified_bound,
    map_point,
    mrq_closed_form,
    mrq_quadrature,
    simplified_threshold,
    transfer_constants,
    weight_envelope,
)
from cusp_spectra.params import DomainSpec, validate_problem
from cusp_spectra.quadrature import QuadConfig, graded_power_integral, integrate_cusp, integrate_triangle
from cusp_spectra.validation import (
    DenominatorNonpositive,
    DomainPointError,
    InfeasibleQR,
    NonintegrableSingularity,
    ValidationError,
)


@pytest.fixture
def cusp():
    return DomainSpec.planar(2.0)


@pytest.fixture
def problem(cusp):
    return validate_problem(cusp, 2.0, 2.0, 0.0)


class TestMapping:
    """Pointwise evaluation of φ_a."""

    def test_map_point(self, cusp):
        m = CuspMapping(0.5, cusp)
        assert map_point(m, [0.25, 0.25]) == pytest.approx([0.25, 0.5])

    def test_image_lies_in_cusp(self, cusp):
        m = CuspMapping(0.5, cusp)
        rng = np.random.default_rng(3)
        x2 = rng.uniform(0.01, 1.0, 200)
        x1 = rng.uniform(0.0, 1.0, 200) * x2
        y = map_point(m, np.column_stack([x1, x2]))
        assert np.all(y[:, 1] > 0) and np.all(y[:, 1] <= 1)
        assert np.all(y[:, 0] <= y[:, 1] ** cusp.gamma1 * (1 + 1e-12))

    def test_jacobian(self, cusp):
        m = CuspMapping(0.5, cusp)
        assert jacobian(m, [0.25, 0.25]) == pytest.approx(1.0)

    def test_jacobian_is_determinant(self, cusp):
        m = CuspMapping(0.4, cusp)
        pts = np.array([[0.1, 0.3], [0.5, 0.9], [0.02, 0.05]])
        dets = np.linalg.det(differential(m, pts))
        assert dets == pytest.approx(jacobian(m, pts), rel=1e-12)

    def test_diff_norm_bound(self, cusp):
        m = CuspMapping(0.5, cusp)
        assert m.distortion_factor() == pytest.approx(math.sqrt(1.25))
        assert diff_norm_bound(m, [0.25, 0.25]) == pytest.approx(2.0 * math.sqrt(1.25))

    def test_envelope_dominates_operator_norm(self, cusp):
        m = CuspMapping(0.45, cusp)
        rng = np.random.default_rng(0)
        x2 = rng.uniform(0.01, 1.0, 100)
        pts = np.column_stack([rng.uniform(0.0, 1.0, 100) * x2, x2])
        norms = np.linalg.norm(differential(m, pts), ord=2, axis=(-2, -1))
        assert np.all(norms <= diff_norm_bound(m, pts) * (1 + 1e-12))

    def test_identity_map(self):
        m = CuspMapping(1.0, DomainSpec.planar(1.0))
        assert m.is_identity
        x = np.array([0.3, 0.7])
        assert map_point(m, x) == pytest.approx(x)

    def test_tip_excluded(self, cusp):
        with pytest.raises(DomainPointError):
            map_point(CuspMapping(0.5, cusp), [0.0, 0.0])

    def test_point_outside_reference_domain(self, cusp):
        with pytest.raises(DomainPointError):
            jacobian(CuspMapping(0.5, cusp), [0.6, 0.5])

    def test_non_positive_exponent(self, cusp):
        with pytest.raises(ValidationError):
            CuspMapping(0.0, cusp)


class TestWeightEnvelope:
    def test_positive_alpha(self):
        assert weight_envelope(0.5, 2.0, 2) == pytest.approx((1.0, 2.0))

    def test_negative_alpha(self):
        assert weight_envelope(0.5, -1.0, 2) == pytest.approx((2 ** -0.5, 1.0))

    def test_envelope_brackets_weight(self, cusp):
        m = CuspMapping(0.5, cusp)
        rng = np.random.default_rng(1)
        x2 = rng.uniform(0.01, 1.0, 100)
        pts = np.column_stack([rng.uniform(0.0, 1.0, 100) * x2, x2])
        for alpha in (-1.0, 0.5, 1.5):
            c_lo, c_hi = weight_envelope(0.5, alpha, 2)
            weight = np.linalg.norm(map_point(m, pts), axis=1) ** alpha
            base = x2 ** (0.5 * alpha)
            assert np.all(c_lo * base <= weight * (1 + 1e-12))
            assert np.all(weight <= c_hi * base * (1 + 1e-12))


class TestTransferConstants:
    """Closed forms and their quadrature counterparts."""

    def test_kps_closed_form(self, cusp, problem):
        assert kps_closed_form(0.5, 1.2, problem, cusp) == pytest.approx(1.468, abs=1e-3)

    def test_kps_identity_map(self):
        # a = 1 lies outside the window but the closed form only needs integrability
        spec = DomainSpec.planar(1.0)
        problem = validate_problem(spec, 1.5, 2.0, 0.5)
        value = kps_closed_form(1.0, 1.1, problem, spec)
        bracket = (1.5 - 1.1) / (3.0 - 1.1 * 2.5)
        expected = math.sqrt(2.0) * bracket ** ((1.5 - 1.1) / (1.5 * 1.1))
        assert value == pytest.approx(expected, rel=1e-12)

    def test_kps_denominator(self, cusp, problem):
        with pytest.raises(DenominatorNonpositive):
            kps_closed_form(0.5, 1.7, problem, cusp)

    def test_mrq_closed_form(self, cusp):
        assert mrq_closed_form(0.5, 4.0, 2.0, cusp) == pytest.approx(1.0 / math.sqrt(2.0))

    def test_mrq_divergent(self, cusp):
        with pytest.raises(InfeasibleQR):
            mrq_closed_form(0.5, 2.0, 2.0, cusp)

    @pytest.mark.parametrize("a,r,q", [(0.5, 4.0, 2.0), (0.6, 3.0, 1.5), (0.4, 6.0, 2.5)])
    def test_mrq_quadrature_matches_closed_form(self, cusp, a, r, q):
        exact = mrq_closed_form(a, r, q, cusp)
        assert mrq_quadrature(a, r, q, cusp) == pytest.approx(exact, rel=1e-6)

    def test_kps_quadrature_below_closed_form(self, cusp):
        problem = validate_problem(cusp, 2.0, 2.0, 0.5)
        for a, s in ((0.5, 1.2), (0.3, 1.4)):
            quad = kps_quadrature(a, s, problem, cusp)
            closed = kps_closed_form(a, s, problem, cusp)
            assert quad <= closed * (1 + 1e-6)

    def test_kps_quadrature_exact_for_unweighted(self, cusp, problem):
        # with α = 0 the weight envelope is exact
        quad = kps_quadrature(0.5, 1.2, problem, cusp)
        assert quad == pytest.approx(kps_closed_form(0.5, 1.2, problem, cusp), rel=1e-6)

    def test_kps_quadrature_nonintegrable(self, cusp, problem):
        with pytest.raises(NonintegrableSingularity):
            kps_quadrature(0.5, 1.7, problem, cusp)

    def test_transfer_constants_methods(self, cusp, problem):
        closed = transfer_constants(0.5, 1.2, 3.5, problem, cusp)
        quad = transfer_constants(0.5, 1.2, 3.5, problem, cusp, QUADRATURE)
        assert quad.method == QUADRATURE
        assert quad.k_ps == pytest.approx(closed.k_ps, rel=1e-6)
        assert quad.m_rq == pytest.approx(closed.m_rq, rel=1e-6)
        assert closed.c_a == 1.0

    def test_simplified_bound(self, cusp, problem):
        assert simplified_threshold(0.5, problem, cusp) == pytest.approx(2.0 / 3.5)
        assert kps_simplified_bound(0.5, problem, cusp) == pytest.approx(math.sqrt(1.25) / math.sqrt(0.5))

    def test_higher_dimension_quadrature_refused(self):
        spec = DomainSpec(3, (1.5, 1.5))
        with pytest.raises(ValidationError):
            mrq_quadrature(0.5, 4.0, 2.0, spec)


class TestCompositionInequality:
    """‖∇(f∘φ_a)‖_s ≤ K_{p,s}·‖∇f‖_{p,α} on random polynomials."""

    @pytest.mark.parametrize("alpha", [0.0, 0.5, -0.5])
    def test_inequality_holds(self, cusp, alpha):
        problem = validate_problem(cusp, 2.0, 2.0, alpha)
        rng = np.random.default_rng(11)
        for _ in range(3):
            f = Polynomial2D.random(rng, degree=3)
            report = composition_inequality_check(f, 0.5, 1.2, problem, cusp)
            assert report.holds, (report.lhs, report.rhs)

    def test_polynomial_gradient(self):
        f = Polynomial2D(((2, 1, 1.0), (0, 1, 3.0)))
        d1, d2 = f.gradient(np.array(0.5), np.array(2.0))
        assert float(d1) == pytest.approx(2 * 0.5 * 2.0)
        assert float(d2) == pytest.approx(0.25 + 3.0)


class TestGradedQuadrature:
    """Integrals with a power singularity at the tip."""

    def test_power_integral(self):
        value = graded_power_integral(lambda t: np.ones_like(t), -0.5)
        assert value == pytest.approx(2.0, rel=1e-9)

    def test_triangle_area(self):
        value = integrate_triangle(lambda x1, x2: np.ones_like(x1 + x2), 0.0)
        assert value == pytest.approx(0.5, rel=1e-9)

    def test_cusp_area(self):
        value = integrate_cusp(lambda y1, y2: np.ones_like(y1 + y2), 2.0, 0.0)
        assert value == pytest.approx(1.0 / 3.0, rel=1e-9)

    def test_singular_triangle_integral(self):
        # ∫_0^1 x2 · x2^{-1.5} dx2 = 2
        value = integrate_triangle(lambda x1, x2: x2 ** -1.5 + 0.0 * x1, -1.5)
        assert value == pytest.approx(2.0, rel=1e-7)

    def test_nonintegrable_rejected(self):
        with pytest.raises(ValidationError):
            graded_power_integral(lambda t: np.ones_like(t), -1.0)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            QuadConfig(rtol=0.0)
