"""Tests for the inner subproblem solver and the projected-gradient kernel."""

import numpy as np
import pytest

from slcl.catalog import catalog_get
from slcl.innersolve import (CONVERGED, ITERATION_LIMIT, UNBOUNDED,
                             InnerOptions, PpInfeasible, bound_solve, solve_lc,
                             solve_proximal, verify_relaxed_kkt)
from slcl.linearize import assemble_elastic, linearize_constraints
from slcl.model import INF, NlpProblem, build_slack_form


def _quadratic(Q, a):
    """Value/gradient closures for 0.5 (x-a)' Q (x-a)."""

    def value(x):
        d = x - a
        return 0.5 * float(d @ Q @ d)

    def value_grad(x):
        d = x - a
        return 0.5 * float(d @ Q @ d), Q @ d

    return value, value_grad


class TestBoundSolve:
    def test_scalar_clipped_minimizer(self):
        """min (x - 3)^2 over [0, 2] stops at the upper bound."""
        value = lambda x: (x[0] - 3.0) ** 2
        value_grad = lambda x: ((x[0] - 3.0) ** 2, np.array([2.0 * (x[0] - 3.0)]))
        res = bound_solve(value, value_grad, np.array([0.0]), np.array([2.0]),
                          np.array([0.0]), tol=1e-8)
        assert res.status == CONVERGED
        np.testing.assert_allclose(res.x, [2.0], atol=1e-10)

    def test_componentwise_projection(self):
        a = np.array([-1.0, 5.0])
        value = lambda x: float(((x - a) ** 2).sum())
        value_grad = lambda x: (float(((x - a) ** 2).sum()), 2.0 * (x - a))
        res = bound_solve(value, value_grad, np.zeros(2), np.full(2, INF),
                          np.ones(2), tol=1e-8)
        assert res.status == CONVERGED
        np.testing.assert_allclose(res.x, [0.0, 5.0], atol=1e-8)

    def test_interior_minimizer(self):
        value = lambda x: float((x ** 2).sum())
        value_grad = lambda x: (float((x ** 2).sum()), 2.0 * x)
        res = bound_solve(value, value_grad, np.full(2, -1.0), np.full(2, 1.0),
                          np.ones(2), tol=1e-10)
        assert res.status == CONVERGED
        np.testing.assert_allclose(res.x, 0.0, atol=1e-10)

    def test_matches_grid_on_random_convex_quadratics(self):
        """Brute-force oracle: argmin over a 1e-3 grid of the box."""
        rng = np.random.default_rng(101)
        for _ in range(5):
            B = rng.standard_normal((2, 2))
            Q = B.T @ B + 0.5 * np.eye(2)
            a = rng.uniform(-1.5, 1.5, size=2)
            lo = rng.uniform(-1.0, -0.2, size=2)
            hi = rng.uniform(0.2, 1.0, size=2)
            value, value_grad = _quadratic(Q, a)
            res = bound_solve(value, value_grad, lo, hi,
                              0.5 * (lo + hi), tol=1e-9)
            assert res.status == CONVERGED
            g0 = np.append(np.arange(lo[0], hi[0], 1e-3), hi[0])
            g1 = np.append(np.arange(lo[1], hi[1], 1e-3), hi[1])
            X, Y = np.meshgrid(g0, g1)
            D0, D1 = X - a[0], Y - a[1]
            F = 0.5 * (Q[0, 0] * D0 ** 2 + 2 * Q[0, 1] * D0 * D1
                       + Q[1, 1] * D1 ** 2)
            j = np.unravel_index(int(np.argmin(F)), F.shape)
            grid_x = np.array([X[j], Y[j]])
            np.testing.assert_allclose(res.x, grid_x, atol=2e-3)
            assert value(res.x) <= F[j] + 1e-9

    def test_iteration_cap_reported(self):
        # 1 iteration cannot reach the flat tolerance from this start
        value = lambda x: float((x ** 2).sum())
        value_grad = lambda x: (float((x ** 2).sum()), 2.0 * x)
        res = bound_solve(value, value_grad, np.full(2, -INF), np.full(2, INF),
                          np.full(2, 3.0), tol=1e-14, iter_cap=1)
        assert res.status == ITERATION_LIMIT

    def test_descending_ray_flags_unbounded(self):
        value = lambda x: float(-x[0])
        value_grad = lambda x: (float(-x[0]), np.array([-1.0]))
        res = bound_solve(value, value_grad, np.array([0.0]), np.array([INF]),
                          np.array([1.0]), tol=1e-8)
        assert res.status == UNBOUNDED

    def test_alpha_seed_round_trip(self):
        """The returned steplength reseeds a warm call to the same function."""
        value, value_grad = _quadratic(np.diag([1.0, 4.0]), np.zeros(2))
        cold = bound_solve(value, value_grad, np.full(2, -5.0), np.full(2, 5.0),
                           np.array([3.0, 2.0]), tol=1e-9)
        warm = bound_solve(value, value_grad, np.full(2, -5.0), np.full(2, 5.0),
                           np.array([3.0, 2.0]), tol=1e-9, alpha0=cold.alpha)
        assert warm.status == CONVERGED
        assert warm.iterations <= cold.iterations + 1


def _subproblem(name, x, y, rho, sigma):
    sf = build_slack_form(catalog_get(name).problem)
    x0 = sf.embed(np.asarray(x, dtype=float))
    lin = linearize_constraints(sf, x0)
    m = sf.m
    return sf, assemble_elastic(lin, np.full(m, float(y)), rho, sigma)


class TestSolveLc:
    def test_affine_row_equality_qp(self):
        """min x1^2 + x2^2 on x1 + x2 = 2 gives (1, 1) with row price 2."""
        # grid oracle: min over x1 of x1^2 + (2 - x1)^2 at 1e-3 resolution
        g = np.arange(0.0, 2.0001, 1e-3)
        fg = g ** 2 + (2.0 - g) ** 2
        i = int(np.argmin(fg))
        assert abs(g[i] - 1.0) <= 1e-3 and abs(fg[i] - 2.0) <= 1e-5

        sf, sub = _subproblem("linear-as-nl", [0.0, 0.0], 0.0, 0.0, 100.0)
        sol = solve_lc(sub, InnerOptions())
        assert sol.status == CONVERGED
        np.testing.assert_allclose(sol.x_star, [1.0, 1.0, 2.0], atol=1e-5)
        np.testing.assert_allclose(sol.delta_y, [2.0], atol=1e-5)
        np.testing.assert_allclose(sol.z_star[:2], 0.0, atol=1e-5)
        np.testing.assert_allclose(sol.v_star, 0.0, atol=1e-9)
        np.testing.assert_allclose(sol.w_star, 0.0, atol=1e-9)
        assert verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)

    def test_zero_price_reduces_to_box_minimization(self):
        """sigma = 0, rho = 2: minimize x1^2 + x2^2 + (x1 + x2 - 2)^2 over x >= 0."""
        # grid oracle at 1e-3 resolution puts the minimizer at (2/3, 2/3)
        g = np.arange(0.0, 2.0001, 1e-3)
        X, Y = np.meshgrid(g, g)
        F = X ** 2 + Y ** 2 + (X + Y - 2.0) ** 2
        j = np.unravel_index(int(np.argmin(F)), F.shape)
        np.testing.assert_allclose([X[j], Y[j]], [2.0 / 3.0] * 2, atol=2e-3)

        sf, sub = _subproblem("linear-as-nl", [0.0, 0.0], 0.0, 2.0, 0.0)
        sol = solve_lc(sub, InnerOptions())
        assert sol.status == CONVERGED
        np.testing.assert_allclose(sol.x_star[:2], [2.0 / 3.0] * 2, atol=1e-4)
        # the row is absorbed by the elastics: v - w = 2 - x1 - x2
        np.testing.assert_allclose(sol.v_star - sol.w_star, [2.0 / 3.0],
                                   atol=1e-4)
        assert verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)

    def test_descent_ray_is_flagged(self):
        """Linearizing x2^2 = 0 at x2 = 0 frees the -x1 ray in x >= 0."""
        sf, sub = _subproblem("unbounded-ray", [1.0, 0.0], 0.0, 0.0, 100.0)
        sol = solve_lc(sub, InnerOptions())
        assert sol.status == UNBOUNDED

    def test_elastic_complementarity_at_convergence(self):
        for sigma in (0.0, 1.0, 100.0):
            sf, sub = _subproblem("circle-proj", [0.5, 0.5], 0.0, 10.0, sigma)
            sol = solve_lc(sub, InnerOptions())
            assert sol.status == CONVERGED
            assert np.minimum(sol.v_star, sol.w_star).max(initial=0.0) <= 1e-8
            assert np.all(sol.v_star >= 0.0) and np.all(sol.w_star >= 0.0)

    def test_high_price_zeroes_elastics(self):
        """A consistent linearization plus a large price leaves no elastic use."""
        sf, sub = _subproblem("circle-proj", [0.5, 0.5], 0.0, 10.0, 100.0)
        sol = solve_lc(sub, InnerOptions())
        assert sol.status == CONVERGED
        assert np.abs(sol.v_star).max() + np.abs(sol.w_star).max() <= 1e-6

    def test_warm_start_is_cheaper(self):
        sf, sub = _subproblem("two-circles", [1.0, 0.5], 0.0, 10.0, 100.0)
        cold = solve_lc(sub, InnerOptions())
        warm = solve_lc(sub, InnerOptions(), warm_start=cold)
        assert warm.status == CONVERGED
        assert warm.inner_iterations <= cold.inner_iterations

    def test_dual_cycle_values_climb_on_convex_instance(self):
        """Each cycle minimum is a dual value; on a convex problem they ascend."""
        sf, sub = _subproblem("linear-as-nl", [0.0, 0.0], 0.0, 0.0, 100.0)
        sol = solve_lc(sub, InnerOptions())
        path = np.array(sol.al_merit_path)
        assert len(path) >= 2
        assert np.all(np.diff(path) >= -1e-8)

    def test_converged_triples_verify(self):
        rng = np.random.default_rng(67)
        for name in ("circle-proj", "two-circles", "ball-proj", "sphere-min-sum"):
            sf = build_slack_form(catalog_get(name).problem)
            x0 = sf.embed(sf.nlp.x_tilde + 0.1 * rng.standard_normal(sf.n))
            lin = linearize_constraints(sf, x0)
            sub = assemble_elastic(lin, rng.standard_normal(sf.m), 10.0, 50.0)
            sol = solve_lc(sub, InnerOptions())
            assert sol.status == CONVERGED, name
            assert verify_relaxed_kkt(sub, sol, 1e-6, 1e-6), name


class TestVerifyRelaxedKkt:
    def _converged(self):
        sf, sub = _subproblem("linear-as-nl", [0.0, 0.0], 0.0, 0.0, 100.0)
        return sub, solve_lc(sub, InnerOptions())

    def test_exact_solution_passes(self):
        sub, sol = self._converged()
        assert verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)

    def test_oversized_dual_step_fails(self):
        sub, sol = self._converged()
        sol.delta_y = np.array([sub.sigma_k + 2e-6])
        assert not verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)

    def test_negative_elastic_fails(self):
        sub, sol = self._converged()
        sol.v_star = np.array([-1e-3])
        assert not verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)

    def test_row_violation_fails(self):
        sub, sol = self._converged()
        sol.x_star = sol.x_star + np.array([0.1, 0.0, 0.0])
        assert not verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)

    def test_inconsistent_reduced_costs_fail(self):
        sub, sol = self._converged()
        sol.z_star = sol.z_star + 1.0
        assert not verify_relaxed_kkt(sub, sol, 1e-6, 1e-6)


class TestSolveProximal:
    def test_projects_onto_box(self):
        sf = build_slack_form(catalog_get("box-quadratic").problem)
        x0 = solve_proximal(sf, np.array([-1.0, 5.0]))
        np.testing.assert_allclose(x0[:2], [0.0, 2.0], atol=1e-8)
        np.testing.assert_allclose(sf.residual(x0), 0.0, atol=1e-6)

    def test_feasible_guess_is_kept(self):
        sf = build_slack_form(catalog_get("box-quadratic").problem)
        for variant in ("pp2", "pp1"):
            x0 = solve_proximal(sf, np.array([1.0, 1.0]), variant=variant)
            np.testing.assert_allclose(x0[:2], [1.0, 1.0], atol=1e-4)
            np.testing.assert_allclose(sf.residual(x0), 0.0, atol=1e-6)

    def test_equality_rows_are_met(self):
        sf = build_slack_form(catalog_get("lin-eq-quadratic").problem)
        for variant in ("pp2", "pp1"):
            x0 = solve_proximal(sf, np.array([5.0, 0.0, 0.0]), variant=variant)
            np.testing.assert_allclose(sf.residual(x0), 0.0, atol=1e-6)
            x = x0[:3]
            assert abs(x[0] + x[1] + x[2] - 4.0) <= 1e-6
            assert abs(x[0] - x[1]) <= 1e-6

    def test_impossible_rows_raise(self):
        """x1 + x2 = 10 cannot hold inside [0, 1]^2."""
        p = NlpProblem(
            n=2, m_c=0, m_A=1,
            eval_f=lambda x: 0.0, eval_g=lambda x: np.zeros(2),
            eval_c=None, eval_J=None, A=np.array([[1.0, 1.0]]),
            bounds_x=(np.zeros(2), np.ones(2)),
            bounds_c=(np.zeros(0), np.zeros(0)),
            bounds_A=(np.array([10.0]), np.array([10.0])),
            x_tilde=np.array([0.5, 0.5]))
        sf = build_slack_form(p)
        with pytest.raises(PpInfeasible):
            solve_proximal(sf, p.x_tilde)

    def test_unknown_variant_rejected(self):
        sf = build_slack_form(catalog_get("box-quadratic").problem)
        with pytest.raises(ValueError):
            solve_proximal(sf, np.array([1.0, 1.0]), variant="pp3")

    def test_no_linear_rows_is_plain_embedding(self):
        sf = build_slack_form(catalog_get("circle-proj").problem)
        x0 = solve_proximal(sf, np.array([-2.0, 0.5]))
        np.testing.assert_allclose(x0[:2], [0.0, 0.5])
