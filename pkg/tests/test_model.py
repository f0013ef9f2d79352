"""Tests for problem definition, the slack form, and derivative checking."""

import numpy as np
import pytest

from slcl.catalog import catalog_get, catalog_names
from slcl.model import (INF, NlpProblem, build_slack_form, check_derivatives,
                        push_interior)


def _bilinear_problem(swap_gradient=False):
    """f(x) = x1 * x2, no rows, unbounded box."""
    if swap_gradient:
        g = lambda x: np.array([x[0], x[1]])
    else:
        g = lambda x: np.array([x[1], x[0]])
    return NlpProblem(
        n=2, m_c=0, m_A=0,
        eval_f=lambda x: x[0] * x[1], eval_g=g,
        eval_c=None, eval_J=None, A=np.zeros((0, 2)),
        bounds_x=(np.full(2, -INF), np.full(2, INF)),
        bounds_c=(np.zeros(0), np.zeros(0)),
        bounds_A=(np.zeros(0), np.zeros(0)),
        x_tilde=np.array([2.0, 3.0]))


def _circle_problem():
    """f = x1^2 + x2^2 with one ring row x1^2 + x2^2 - 1 in [0, inf)."""
    return NlpProblem(
        n=2, m_c=1, m_A=0,
        eval_f=lambda x: x[0] ** 2 + x[1] ** 2,
        eval_g=lambda x: 2.0 * x,
        eval_c=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 1.0]),
        eval_J=lambda x: np.array([[2.0 * x[0], 2.0 * x[1]]]),
        A=np.zeros((0, 2)),
        bounds_x=(np.full(2, -INF), np.full(2, INF)),
        bounds_c=(np.array([0.0]), np.array([INF])),
        bounds_A=(np.zeros(0), np.zeros(0)),
        x_tilde=np.array([1.0, 1.0]))


class TestSlackForm:
    def test_nonlinear_row_layout(self):
        """One nonlinear row in [0, inf) adds one slack with those bounds."""
        sf = build_slack_form(_circle_problem())
        assert sf.n_ext == 3
        assert sf.m == 1
        assert sf.lo[2] == 0.0 and sf.hi[2] == INF
        # residual is c(x) - s
        x_ext = np.array([1.0, 1.0, 0.5])
        np.testing.assert_allclose(sf.residual(x_ext), [0.5])

    def test_linear_row_layout(self):
        """x1 + x2 <= 4 becomes the equality A x - s = 0 with s in (-inf, 4]."""
        p = NlpProblem(
            n=2, m_c=0, m_A=1,
            eval_f=lambda x: float(x[0]), eval_g=lambda x: np.array([1.0, 0.0]),
            eval_c=None, eval_J=None, A=np.array([[1.0, 1.0]]),
            bounds_x=(np.zeros(2), np.full(2, INF)),
            bounds_c=(np.zeros(0), np.zeros(0)),
            bounds_A=(np.array([-INF]), np.array([4.0])),
            x_tilde=np.array([1.0, 1.0]))
        sf = build_slack_form(p)
        assert sf.n_ext == 3
        assert sf.lo[2] == -INF and sf.hi[2] == 4.0
        x_ext = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(sf.residual(x_ext), [0.0])
        np.testing.assert_allclose(sf.residual([1.0, 2.0, 2.5]), [0.5])

    def test_embed_zeroes_residual_at_feasible_point(self):
        entry = catalog_get("circle-proj")
        sf = build_slack_form(entry.problem)
        x_ext = sf.embed(entry.known_x)
        np.testing.assert_allclose(sf.residual(x_ext), 0.0, atol=1e-12)

    def test_round_trip_feasibility(self):
        """Zero slack-form residual at in-bounds slacks == row feasibility."""
        entry = catalog_get("ball-proj")
        sf = build_slack_form(entry.problem)
        p = entry.problem
        rng = np.random.default_rng(42)
        for _ in range(20):
            x = rng.uniform(0.0, 2.0, size=3)
            x_ext = sf.embed(x)
            cval = p.c(x)
            aval = p.A @ x
            in_rows = (np.all(cval >= p.bounds_c[0] - 1e-12)
                       and np.all(cval <= p.bounds_c[1] + 1e-12)
                       and np.all(aval >= p.bounds_A[0] - 1e-12)
                       and np.all(aval <= p.bounds_A[1] + 1e-12))
            zero_res = np.abs(sf.residual(x_ext)).max() <= 1e-12
            assert zero_res == in_rows

    def test_jacobian_matches_residual_differences(self):
        sf = build_slack_form(_circle_problem())
        rng = np.random.default_rng(7)
        x_ext = rng.standard_normal(3)
        J = sf.jacobian(x_ext)
        h = 1e-6
        for j in range(3):
            d = np.zeros(3)
            d[j] = h
            col = (sf.residual(x_ext + d) - sf.residual(x_ext - d)) / (2 * h)
            np.testing.assert_allclose(J[:, j], col, atol=1e-7)

    def test_dimension_probe_rejects_bad_callbacks(self):
        p = _circle_problem()
        p.eval_J = lambda x: np.zeros((2, 2))
        with pytest.raises(ValueError):
            build_slack_form(p)

    def test_bounds_pair_ordering_enforced(self):
        with pytest.raises(ValueError):
            NlpProblem(
                n=1, m_c=0, m_A=0,
                eval_f=lambda x: 0.0, eval_g=lambda x: np.zeros(1),
                eval_c=None, eval_J=None, A=np.zeros((0, 1)),
                bounds_x=(np.array([1.0]), np.array([0.0])),
                bounds_c=(np.zeros(0), np.zeros(0)),
                bounds_A=(np.zeros(0), np.zeros(0)),
                x_tilde=np.zeros(1))


class TestDerivativeCheck:
    def test_bilinear_gradient_passes(self):
        """Central differences are exact for f = x1 x2 up to roundoff."""
        rep = check_derivatives(_bilinear_problem(), np.array([2.0, 3.0]))
        assert rep.passed
        assert rep.max_rel_err_g <= 1e-8

    def test_quadratic_jacobian_passes(self):
        rep = check_derivatives(_circle_problem(), np.array([1.0, 1.0]))
        assert rep.passed
        assert rep.max_rel_err_J <= 1e-8

    def test_swapped_gradient_fails_and_is_located(self):
        """g reporting (x1, x2) instead of (x2, x1) at (2, 3) trips g[0]."""
        rep = check_derivatives(_bilinear_problem(swap_gradient=True),
                                np.array([2.0, 3.0]))
        assert not rep.passed
        assert rep.worst_index == "g[0]"

    def test_point_too_close_to_bound_rejected(self):
        p = _circle_problem()
        p.bounds_x = (np.zeros(2), np.full(2, INF))
        with pytest.raises(ValueError):
            check_derivatives(p, np.array([0.0, 1.0]))

    def test_catalog_entries_pass_everywhere(self):
        """Every entry checks clean at its start point and 5 interior samples."""
        rng = np.random.default_rng(314)
        for name in catalog_names():
            p = catalog_get(name).problem
            lx, ux = p.bounds_x
            probe = push_interior(p.x_tilde, lx, ux, margin=1e-3)
            assert check_derivatives(p, probe).passed, name
            for _ in range(5):
                x = probe + rng.uniform(-0.5, 0.5, size=p.n)
                x = push_interior(x, lx, ux, margin=1e-3)
                assert check_derivatives(p, x).passed, name


class TestPushInterior:
    def test_clips_to_margin_inside_finite_bounds(self):
        lo = np.array([0.0, -INF])
        hi = np.array([1.0, 2.0])
        out = push_interior(np.array([0.0, 5.0]), lo, hi, margin=0.1)
        np.testing.assert_allclose(out, [0.1, 1.9])

    def test_too_thin_box_raises(self):
        lo, hi = np.array([0.0]), np.array([0.1])
        with pytest.raises(ValueError):
            push_interior(np.array([0.05]), lo, hi, margin=0.2)


class TestCatalog:
    def test_unknown_name_raises(self):
        with pytest.raises(KeyError):
            catalog_get("no-such-problem")

    def test_required_entries_present(self):
        names = catalog_names()
        for required in ("circle-proj", "linear-as-nl", "infeas-affine",
                         "unbounded-ray"):
            assert required in names
        solvable = [n for n in names
                    if catalog_get(n).classification == "solvable"]
        assert len(solvable) >= 14

    def test_circle_proj_against_arc_grid(self):
        """Brute force over the feasible arc theta in [0, pi/2], 1e-4 grid."""
        entry = catalog_get("circle-proj")
        theta = np.arange(0.0, np.pi / 2 + 1e-4, 1e-4)
        fx = (np.cos(theta) - 2.0) ** 2 + (np.sin(theta) - 1.0) ** 2
        i = int(np.argmin(fx))
        assert abs(fx[i] - entry.known_objective) <= 1e-8
        grid_x = np.array([np.cos(theta[i]), np.sin(theta[i])])
        np.testing.assert_allclose(grid_x, entry.known_x, atol=1e-4)
        np.testing.assert_allclose(entry.known_objective,
                                   (np.sqrt(5.0) - 1.0) ** 2, rtol=1e-14)

    def test_linear_as_nl_kkt_solution(self):
        """min x1^2 + x2^2 on x1 + x2 = 2: x = (1, 1), f = 2, y = 2."""
        entry = catalog_get("linear-as-nl")
        np.testing.assert_allclose(entry.known_x, [1.0, 1.0])
        assert entry.known_objective == 2.0
        # stationarity: g = y * (1, 1) at the solution
        g = entry.problem.g(entry.known_x)
        np.testing.assert_allclose(g, entry.known_y[0] * np.ones(2))

    def test_infeas_affine_min_norm_point(self):
        """x1 + x2 + 1 = 0 has no solution in x >= 0; nearest residual is 1."""
        entry = catalog_get("infeas-affine")
        assert entry.classification == "infeasible"
        g = np.arange(0.0, 0.5001, 1e-3)
        X, Y = np.meshgrid(g, g)
        R = 0.5 * (X + Y + 1.0) ** 2
        j = np.unravel_index(int(np.argmin(R)), R.shape)
        assert X[j] == 0.0 and Y[j] == 0.0
        assert abs(X[j] + Y[j] + 1.0 - 1.0) == 0.0

    def test_solvable_solutions_are_feasible(self):
        for name in catalog_names():
            entry = catalog_get(name)
            if entry.classification != "solvable" or entry.known_x is None:
                continue
            p = entry.problem
            x = entry.known_x
            lx, ux = p.bounds_x
            assert np.all(x >= lx - 1e-8) and np.all(x <= ux + 1e-8), name
            if p.m_c:
                cval = p.c(x)
                assert np.all(cval >= p.bounds_c[0] - 1e-8), name
                assert np.all(cval <= p.bounds_c[1] + 1e-8), name
            if p.m_A:
                aval = p.A @ x
                assert np.all(aval >= p.bounds_A[0] - 1e-8), name
                assert np.all(aval <= p.bounds_A[1] + 1e-8), name

    def test_declared_objective_matches_point(self):
        for name in catalog_names():
            entry = catalog_get(name)
            if entry.known_x is None or entry.known_objective is None:
                continue
            f = entry.problem.f(entry.known_x)
            assert abs(f - entry.known_objective) <= 1e-10 * (1 + abs(f)), name

    def test_evaluation_counters(self):
        entry = catalog_get("circle-proj")
        p = entry.problem
        assert p.eval_total() == 0
        p.f(p.x_tilde)
        p.c(p.x_tilde)
        p.c(p.x_tilde)
        assert p.n_feval == 1 and p.n_ceval == 2
        assert p.eval_total() == 3

    def test_fresh_entries_per_lookup(self):
        a = catalog_get("circle-proj").problem
        a.f(a.x_tilde)
        b = catalog_get("circle-proj").problem
        assert b.eval_total() == 0
