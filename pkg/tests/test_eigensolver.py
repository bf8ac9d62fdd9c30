"""
Tests for the discrete weighted p-Laplacian: operator identities, the inner
minimization and the three eigensolvers.
"""
import math

import numpy as np
import pytest
from scipy.optimize import minimize

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))
from cusp_spectra.eigensolver import (
    DiscreteProblem,
    GridFunction,
    SolverConfig,
    a_vector,
    apply_A,
    apply_B,
    constraint_residual,
    direct_eigensolve_p2,
    energy,
    gradient_check,
    inner_solve,
    inverse_iteration,
    lq_norm,
    monotone_operator_check,
    project_constraint,
    rayleigh_descent,
    rayleigh_quotient,
    stiffness,
    weak_residual,
    x_norm,
)
from cusp_spectra.mesh import build_cusp_mesh, build_reference_mesh
from cusp_spectra.params import DomainSpec, admit_discrete_problem
from cusp_spectra.validation import ConstantInput, NonconvergedInner, ValidationError, ZeroFunction


def assemble(gamma1=2.0, N=6, p=2.0, q=2.0, alpha=0.0):
    spec = DomainSpec.planar(gamma1)
    mesh = build_cusp_mesh(gamma1, N)
    return DiscreteProblem.assemble(mesh, admit_discrete_problem(spec, p, q, alpha))


def random_pairs(dp, count, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield rng.standard_normal(dp.mesh.n_vertices), rng.standard_normal(dp.mesh.n_vertices)


class TestAssembly:
    """Weights, mass matrices and norms."""

    def test_unweighted_omega_is_area(self):
        dp = assemble()
        assert np.allclose(dp.omega, dp.mesh.areas)
        assert dp.area == pytest.approx(dp.mesh.polygon_area)

    def test_lumped_mass(self):
        dp = assemble(alpha=0.5)
        assert np.allclose(dp.lumped, dp.mass @ np.ones(dp.mesh.n_vertices))
        assert dp.lumped.sum() == pytest.approx(dp.area)

    def test_weighted_omega(self):
        dp = assemble(alpha=1.0)
        # |x| ≤ √2 on the cusp
        assert np.all(dp.omega <= math.sqrt(2.0) * dp.mesh.areas)
        assert np.all(dp.omega > 0)

    def test_x_norm_examples(self):
        dp = assemble(p=3.0)
        ones = np.ones(dp.mesh.n_vertices)
        assert x_norm(dp, ones) == 0.0
        u = dp.mesh.vertices[:, 0]
        # |∇u| = 1 on every triangle
        assert x_norm(dp, u) == pytest.approx(dp.area ** (1.0 / 3.0))
        assert x_norm(dp, -2.0 * u) == pytest.approx(2.0 * x_norm(dp, u))

    def test_lq_norm_of_constant(self):
        dp = assemble(q=3.0)
        ones = np.ones(dp.mesh.n_vertices)
        assert lq_norm(dp, ones) == pytest.approx(dp.area ** (1.0 / 3.0))

    def test_apply_b_is_mass(self):
        dp = assemble()
        u, v = next(random_pairs(dp, 1))
        assert apply_B(dp, u, v) == pytest.approx(u @ (dp.mass @ v))

    def test_stiffness_matches_operator(self):
        dp = assemble()
        u, v = next(random_pairs(dp, 1, seed=4))
        assert u @ (stiffness(dp) @ v) == pytest.approx(apply_A(dp, u, v))

    def test_grid_function_shape(self):
        mesh = build_cusp_mesh(2.0, 4)
        with pytest.raises(ValidationError):
            GridFunction(mesh, np.zeros(3))

    def test_grid_function_arithmetic(self):
        mesh = build_cusp_mesh(2.0, 4)
        u = GridFunction.interpolate(mesh, lambda x, y: x + y)
        w = 2.0 * u - u
        assert np.allclose(w.values, u.values)
        assert not u.values.flags.writeable


class TestOperatorProperties:
    """Identities and inequalities of the operator A on random nodal functions."""

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("t", [-2.0, -1.0, 0.5, 3.0])
    def test_homogeneity(self, p, t):
        dp = assemble(p=p, alpha=0.5)
        for u, v in random_pairs(dp, 20):
            expected = abs(t) ** (p - 2.0) * t * apply_A(dp, u, v)
            assert apply_A(dp, t * u, v) == pytest.approx(expected, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_energy_identity(self, p):
        dp = assemble(p=p, alpha=-0.5)
        for u, _ in random_pairs(dp, 20, seed=1):
            assert apply_A(dp, u, u) == pytest.approx(x_norm(dp, u) ** p, rel=1e-12)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_holder_bound(self, p):
        dp = assemble(p=p, alpha=0.5)
        for u, v in random_pairs(dp, 50, seed=2):
            assert abs(apply_A(dp, u, v)) <= x_norm(dp, u) ** (p - 1.0) * x_norm(dp, v) * (1 + 1e-12)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_monotone(self, p):
        dp = assemble(p=p, alpha=0.5)
        for u, v in random_pairs(dp, 500, seed=3):
            scale = max(x_norm(dp, u), x_norm(dp, v)) ** p
            assert monotone_operator_check(dp, u, v) >= -1e-12 * scale

    def test_monotone_linear_case(self):
        dp = assemble(alpha=0.5)
        for u, v in random_pairs(dp, 10, seed=9):
            assert monotone_operator_check(dp, u, u) == 0.0
            assert monotone_operator_check(dp, u, v) == pytest.approx(x_norm(dp, u - v) ** 2, rel=1e-12)

    @pytest.mark.parametrize("t", [-2.0, -1.0, 0.5, 3.0])
    def test_b_linear_in_first_argument(self, t):
        dp = assemble(alpha=0.5)
        rng = np.random.default_rng(11)
        for u, v in random_pairs(dp, 20, seed=10):
            w = rng.standard_normal(dp.mesh.n_vertices)
            assert apply_B(dp, t * u, v) == pytest.approx(t * apply_B(dp, u, v), rel=1e-12, abs=1e-15)
            assert apply_B(dp, u + w, v) == pytest.approx(apply_B(dp, u, v) + apply_B(dp, w, v),
                                                          rel=1e-12, abs=1e-14)

    def test_strictly_monotone_on_distinct_functions(self):
        dp = assemble(p=2.5)
        u, v = next(random_pairs(dp, 1, seed=5))
        assert monotone_operator_check(dp, u, v) > 0

    @pytest.mark.parametrize("p,limit", [(2.0, 1e-5), (3.0, 1e-5), (1.5, 1e-4)])
    def test_gradient_check(self, p, limit):
        dp = assemble(p=p, alpha=0.5)
        u = GridFunction.random(dp.mesh, seed=8)
        assert gradient_check(dp, u) <= limit

    def test_gradient_check_step_range(self):
        dp = assemble()
        with pytest.raises(ValidationError):
            gradient_check(dp, GridFunction.random(dp.mesh), h=1e-2)


class TestConstraint:
    """Projection onto ∫|u|^{q-2}u = 0 and the Rayleigh quotient."""

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_projection(self, q):
        dp = assemble(q=q)
        u = GridFunction.random(dp.mesh, seed=2)
        projected = project_constraint(dp, u)
        scale = lq_norm(dp, projected) ** (q - 1.0)
        assert abs(constraint_residual(dp, projected)) <= 1e-10 * scale
        again = project_constraint(dp, projected)
        assert np.allclose(again.values, projected.values, atol=1e-10)

    def test_projection_differs_by_constant(self):
        dp = assemble(q=3.0)
        u = GridFunction.random(dp.mesh, seed=3)
        shift = u.values - project_constraint(dp, u).values
        assert np.allclose(shift, shift[0])

    def test_constant_rejected(self):
        dp = assemble()
        with pytest.raises(ConstantInput):
            project_constraint(dp, np.full(dp.mesh.n_vertices, 2.0))

    def test_rayleigh_scale_invariant(self):
        dp = assemble(p=2.5, q=3.0)
        u = project_constraint(dp, GridFunction.random(dp.mesh, seed=6))
        base = rayleigh_quotient(dp, u)
        for t in (-3.0, 0.1, 7.0):
            assert rayleigh_quotient(dp, t * u) == pytest.approx(base, rel=1e-12)

    def test_rayleigh_of_zero(self):
        dp = assemble()
        with pytest.raises(ZeroFunction):
            rayleigh_quotient(dp, np.zeros(dp.mesh.n_vertices))


class TestInnerSolve:
    """Minimization of J(w) = ‖w‖_X^p / p − ⟨B f, w⟩ over mean-zero w."""

    def test_linear_case(self):
        dp = assemble()
        f = project_constraint(dp, GridFunction.random(dp.mesh, seed=1))
        result = inner_solve(dp, f)
        assert result.iterations == 1
        residual = a_vector(dp, result.w) - dp.mass @ f.values
        assert np.allclose(residual, residual.mean() * dp.lumped / dp.lumped.mean(), atol=1e-10)
        assert result.kkt <= 1e-10

    @pytest.mark.parametrize("p", [1.5, 2.5])
    def test_energy_decreases(self, p):
        dp = assemble(p=p, alpha=0.5)
        f = GridFunction.random(dp.mesh, seed=2)
        result = inner_solve(dp, f, SolverConfig(kkt_tol=1e-7))
        trace = np.asarray(result.energy_trace)
        assert np.all(np.diff(trace) <= 1e-12 * np.abs(trace[1:]))
        assert result.kkt <= 1e-7

    @pytest.mark.parametrize("p,alpha", [(1.5, 0.5), (2.5, 0.5), (3.0, 0.0)])
    def test_default_kkt_tolerance_met(self, p, alpha):
        cfg = SolverConfig()
        dp = assemble(p=p, alpha=alpha)
        result = inner_solve(dp, GridFunction.random(dp.mesh, seed=2), cfg)
        assert result.kkt <= cfg.kkt_tol

    def test_unreachable_tolerance_raises(self):
        dp = assemble(p=2.5, alpha=0.5)
        cfg = SolverConfig(kkt_tol=1e-9, max_inner=2)
        with pytest.raises(NonconvergedInner) as info:
            inner_solve(dp, GridFunction.random(dp.mesh, seed=2), cfg)
        assert info.value.residual > cfg.kkt_tol
        assert "after 2 steps" in str(info.value)

    def test_matches_independent_minimizer(self):
        # L-BFGS on J(Pv), P the projection onto ∫w = 0
        dp = assemble(gamma1=3.0, N=4, p=3.0)
        f = project_constraint(dp, GridFunction.random(dp.mesh, seed=4), 2.0)
        load = dp.mass @ f.values
        m = dp.lumped

        def project(v):
            return v - (m @ v) / m.sum()

        def objective(v):
            w = project(v)
            g = a_vector(dp, w) - load
            return energy(dp, w, load), g - m * g.sum() / m.sum()

        oracle = minimize(objective, np.zeros(dp.mesh.n_vertices), jac=True, method="L-BFGS-B",
                          options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-13})
        result = inner_solve(dp, f)
        assert result.kkt <= 1e-6
        assert result.energy == pytest.approx(oracle.fun, rel=1e-8)
        assert result.energy <= oracle.fun + 1e-12 * abs(oracle.fun)

    @pytest.mark.parametrize("p", [1.5, 2.5])
    def test_minimizer_beats_perturbations(self, p):
        dp = assemble(p=p)
        f = project_constraint(dp, GridFunction.random(dp.mesh, seed=3), 2.0)
        load = dp.mass @ f.values
        result = inner_solve(dp, f)
        rng = np.random.default_rng(0)
        for _ in range(100):
            delta = rng.standard_normal(dp.mesh.n_vertices)
            delta -= (dp.lumped @ delta) / dp.lumped.sum()
            assert energy(dp, result.w.values + 1e-3 * delta, load) >= result.energy - 1e-12

    def test_constant_rhs(self):
        dp = assemble()
        with pytest.raises(ConstantInput):
            inner_solve(dp, np.ones(dp.mesh.n_vertices))


class TestEigensolvers:
    """Inverse iteration, Rayleigh descent and the dense p = q = 2 oracle."""

    def test_direct_zero_mode(self):
        dp = assemble(N=8)
        result = direct_eigensolve_p2(dp)
        assert abs(result.zero_mode) <= 1e-8 * result.lam
        assert result.lam > 0
        assert result.residual <= 1e-8
        assert result.method == "direct"

    @pytest.mark.parametrize("gamma1,alpha", [(2.0, 0.0), (2.0, 0.5), (3.0, -0.5)])
    def test_inverse_iteration_matches_direct(self, gamma1, alpha):
        dp = assemble(gamma1=gamma1, N=8, alpha=alpha)
        direct = direct_eigensolve_p2(dp).lam
        result = inverse_iteration(dp)
        assert result.lam == pytest.approx(direct, rel=1e-6)
        assert result.residual <= 1e-4
        assert abs(result.constraint_residual) <= 1e-10

    def test_mu_trace_nonincreasing(self):
        dp = assemble(N=8, alpha=0.5)
        trace = np.asarray(inverse_iteration(dp).mu_trace)
        assert np.all(np.diff(trace) <= 1e-12 * trace[1:])

    def test_nonlinear_inverse_iteration(self):
        dp = assemble(N=6, p=2.5)
        cfg = SolverConfig(tol=1e-9, kkt_tol=1e-12)
        result = inverse_iteration(dp, cfg=cfg)
        trace = np.asarray(result.mu_trace)
        assert np.all(np.diff(trace) <= 1e-10 * trace[1:])
        assert result.lam <= rayleigh_quotient(dp, project_constraint(dp, GridFunction.random(dp.mesh, 5)))

    def test_minmax_bound(self):
        dp = assemble(N=8)
        lam = inverse_iteration(dp).lam
        for seed in range(100):
            u = project_constraint(dp, GridFunction.random(dp.mesh, seed))
            assert lam <= rayleigh_quotient(dp, u) * (1 + 1e-10)

    @pytest.mark.parametrize("gamma1,p,alpha", [
        (1.0, 2.0, 0.0),
        (2.0, 2.0, 0.5),
        (3.0, 2.0, -0.5),
        (2.0, 2.5, 0.0),
        (2.0, 1.75, 0.5),
    ])
    def test_positive_eigenvalue(self, gamma1, p, alpha):
        dp = assemble(gamma1=gamma1, N=4, p=p, alpha=alpha)
        result = inverse_iteration(dp, cfg=SolverConfig(tol=1e-8))
        assert result.lam > 0
        assert all(mu > 0 for mu in result.mu_trace)

    @pytest.mark.parametrize("gamma1", [1.0, 2.0])
    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.5])
    def test_inverse_iteration_matches_direct_on_fine_mesh(self, gamma1, alpha):
        dp = assemble(gamma1=gamma1, N=32, alpha=alpha)
        assert inverse_iteration(dp).lam == pytest.approx(direct_eigensolve_p2(dp).lam, rel=1e-6)

    def test_start_independence(self):
        cfg = SolverConfig()
        dp = DiscreteProblem.assemble(
            build_reference_mesh(16), admit_discrete_problem(DomainSpec.planar(1.0), 2.0, 2.0, 0.0)
        )
        symmetric = GridFunction.interpolate(
            dp.mesh, lambda x, y: np.cos(math.pi * x) + np.cos(math.pi * y)
        )
        lam_symmetric = inverse_iteration(dp, symmetric, cfg).lam
        for seed in (1, 7):
            lam = inverse_iteration(dp, GridFunction.random(dp.mesh, seed), cfg).lam
            assert lam == pytest.approx(lam_symmetric, rel=2 * cfg.tol)

    def test_refinement_on_reference_triangle(self):
        errors = []
        for N in (16, 32):
            dp = DiscreteProblem.assemble(
                build_reference_mesh(N), admit_discrete_problem(DomainSpec.planar(1.0), 2.0, 2.0, 0.0)
            )
            lam = inverse_iteration(dp).lam
            assert lam == pytest.approx(math.pi ** 2, rel=0.02)
            errors.append(lam - math.pi ** 2)
        assert errors[0] > errors[1] > 0
        assert errors[0] / errors[1] >= 3.0

    def test_rayleigh_descent_matches_direct(self):
        dp = assemble(N=6, alpha=0.5)
        direct = direct_eigensolve_p2(dp).lam
        assert rayleigh_descent(dp).lam == pytest.approx(direct, rel=1e-6)

    def test_rayleigh_descent_general_q(self):
        dp = assemble(N=6, p=2.0, q=3.0)
        result = rayleigh_descent(dp)
        assert result.method == "rayleigh_descent"
        assert abs(result.constraint_residual) <= 1e-8
        for seed in range(3):
            u = project_constraint(dp, GridFunction.random(dp.mesh, seed))
            assert result.lam <= rayleigh_quotient(dp, u) * (1 + 1e-10)

    def test_inverse_iteration_needs_q2(self):
        dp = assemble(q=3.0)
        with pytest.raises(ValidationError):
            inverse_iteration(dp)

    def test_direct_needs_p2(self):
        dp = assemble(p=2.5)
        with pytest.raises(ValidationError):
            direct_eigensolve_p2(dp)

    def test_weak_residual_of_eigenpair(self):
        dp = assemble(N=8)
        result = direct_eigensolve_p2(dp)
        assert weak_residual(dp, result.lam, result.u) <= 1e-8
        assert weak_residual(dp, 2.0 * result.lam, result.u) > 0.5

    def test_result_dict(self):
        dp = assemble(N=4)
        data = inverse_iteration(dp).to_dict()
        for key in ("lambda", "iterations", "mu_trace", "x_norm_trace", "residual",
                    "constraint_residual", "method", "mesh", "problem"):
            assert key in data
        assert data["mesh"]["N"] == 4

    def test_payne_weinberger_lower_bound(self):
        dp = DiscreteProblem.assemble(
            build_reference_mesh(16), admit_discrete_problem(DomainSpec.planar(1.0), 2.0, 2.0, 0.0)
        )
        assert inverse_iteration(dp).lam >= math.pi ** 2 / 2.0

    @pytest.mark.slow
    def test_reference_triangle_eigenvalue(self):
        dp = DiscreteProblem.assemble(
            build_reference_mesh(64), admit_discrete_problem(DomainSpec.planar(1.0), 2.0, 2.0, 0.0)
        )
        assert inverse_iteration(dp).lam == pytest.approx(math.pi ** 2, rel=0.02)

    @pytest.mark.slow
    def test_direct_reference_triangle_eigenvalue(self):
        dp = DiscreteProblem.assemble(
            build_reference_mesh(64), admit_discrete_problem(DomainSpec.planar(1.0), 2.0, 2.0, 0.0)
        )
        assert direct_eigensolve_p2(dp).lam == pytest.approx(math.pi ** 2, rel=0.02)

    @pytest.mark.slow
    def test_refinement_from_32_to_64(self):
        errors = []
        for N in (32, 64):
            dp = DiscreteProblem.assemble(
                build_reference_mesh(N), admit_discrete_problem(DomainSpec.planar(1.0), 2.0, 2.0, 0.0)
            )
            errors.append(inverse_iteration(dp).lam - math.pi ** 2)
        assert errors[0] > errors[1] > 0
        assert errors[0] / errors[1] >= 3.0
