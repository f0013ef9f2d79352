"""Outer solver loop.

Each major iteration linearizes the rows at the current point, solves the
elastic subproblem, and branches on the true constraint residual at the
candidate: a residual within the current feasibility target accepts the
candidate and refreshes the multiplier estimates, anything else keeps the
current estimates, raises the penalty, and tightens the elastic price.  The
elastic weight sigma makes the method degrade gracefully between the two
classical extremes, which are also available directly as modes:

    stabilized  adaptive sigma between sigma_lo and sigma_hi (the default)
    canonical   fixed penalty, sigma pinned at sigma_hi, direct multiplier
                updates, every candidate accepted
    bcl         sigma pinned at zero, so each subproblem is a pure
                bound-constrained augmented Lagrangian minimization

Infeasible problems surface when the penalty climbs past rho_bar while the
nonlinear rows still violate their bounds; the point returned then is a
first-order stationary point of the squared-residual minimization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .innersolve import (CONVERGED, ITERATION_LIMIT, PpInfeasible, UNBOUNDED,
                         InnerOptions, SubproblemSolution, solve_lc,
                         solve_proximal)
from .linearize import assemble_elastic, linearize_constraints
from .merit import KktResidual, is_optimal, kkt_residual
from .model import (NlpProblem, SlackForm, Vector, build_slack_form,
                    check_derivatives, push_interior)

STABILIZED = "stabilized"
CANONICAL = "canonical"
BCL = "bcl"

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED_STATUS = "Unbounded"
ITERATION_LIMIT_STATUS = "IterationLimit"
CANNOT_IMPROVE = "CannotImprove"


@dataclass
class OuterOptions:
    omega_star: float = 1e-6
    eta_star: float = 1e-6
    omega_0: float = 1e-3
    eta_0: float = 1.0
    sigma_lo: float = 1.0
    sigma_hi: float = 1e4
    sigma_0: float = 1e2
    tau_rho: float = 10.0
    tau_sigma: float = 10.0
    alpha: float = 0.1
    beta: float = 0.9
    rho_0: float | None = None
    rho_bar: float = 1e8
    max_major: int = 500
    mode: str = STABILIZED
    multiplier_update: str = "first-order"
    z_update: str = "subproblem"
    pp_variant: str = "pp2"
    inner: InnerOptions = field(default_factory=InnerOptions)

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0 and self.beta > 0.0):
            raise ValueError("schedule exponents need 0 < alpha < 1 and beta > 0")
        if self.tau_rho <= 1.0 or self.tau_sigma <= 1.0:
            raise ValueError("penalty and elastic factors must exceed 1")
        if not (0.0 < self.sigma_lo <= self.sigma_hi):
            raise ValueError("need 0 < sigma_lo <= sigma_hi")
        if self.mode not in (STABILIZED, CANONICAL, BCL):
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.multiplier_update not in ("first-order", "direct"):
            raise ValueError(f"unknown multiplier update: {self.multiplier_update!r}")
        if self.z_update not in ("subproblem", "recompute"):
            raise ValueError(f"unknown z update: {self.z_update!r}")
        if not (self.omega_star > 0 and self.eta_star > 0):
            raise ValueError("target tolerances must be positive")


@dataclass
class TraceRecord:
    k: int
    accepted: bool
    rho: float
    sigma: float
    eta: float
    omega: float
    c_norm: float
    f_norm: float
    inner_status: str
    inner_iterations: int
    delta_y_norm: float
    elastic_inf: float
    objective: float
    rho_next: float
    sigma_next: float
    eta_next: float
    omega_next: float


@dataclass
class OuterState:
    k: int
    x: Vector
    y: Vector
    z: Vector
    rho: float
    sigma: float
    eta: float
    omega: float
    trace: list[TraceRecord] = field(default_factory=list)


@dataclass
class SolveReport:
    status: str
    x: Vector
    x_ext: Vector
    y: Vector
    z: Vector
    residual: KktResidual
    final_objective: float
    majors: int
    minors: int
    fevals: int
    trace: list[TraceRecord]
    f_norm_path: list[float]


def next_omega(omega_k: float, f_norm: float, omega_star: float = 1e-6) -> float:
    """Subproblem tolerance for the next iteration.

    Tightens toward the square of the current optimality measure, halves as a
    safeguard, and never drops below omega_star.
    """
    om = min(omega_k, f_norm ** 2)
    return max(0.5 * om, omega_star)


def update_on_success(state: OuterState, sol: SubproblemSolution, c_val: Vector,
                      opts: OuterOptions) -> OuterState:
    """Accept the candidate: move the point, refresh multipliers, relax sigma.

    The penalty stays put.  The feasibility target tightens by the current
    penalty raised to beta; sigma restarts at the size of the latest row
    multiplier step, clamped into [sigma_lo, sigma_hi].
    """
    y_star = state.y + sol.delta_y
    if opts.multiplier_update == "first-order" and opts.mode != CANONICAL:
        y_new = y_star - state.rho * c_val
    else:
        y_new = y_star
    state.x = np.array(sol.x_star)
    state.y = y_new
    state.z = np.array(sol.z_star)
    if opts.mode == STABILIZED:
        dy_norm = float(np.abs(sol.delta_y).max(initial=0.0))
        state.sigma = max(opts.sigma_lo, min(dy_norm, opts.sigma_hi))
    state.eta = state.eta / state.rho ** opts.beta
    return state


def update_on_failure(state: OuterState, opts: OuterOptions) -> OuterState:
    """Reject the candidate: raise the penalty, cut sigma, reset the target.

    The canonical mode keeps its penalty fixed for the whole run, so only the
    feasibility target is recomputed there.
    """
    if opts.mode != CANONICAL:
        state.rho = state.rho * opts.tau_rho
    if opts.mode == STABILIZED:
        state.sigma = state.sigma / opts.tau_sigma
    state.eta = opts.eta_0 / state.rho ** opts.alpha
    return state


def detect_infeasible(nonlinear_violation: float, rho: float,
                      opts: OuterOptions) -> bool:
    """Declare infeasibility once the penalty is exhausted and rows still violate."""
    return nonlinear_violation > opts.eta_star and rho > opts.rho_bar


def detect_unbounded(x_k_feasible: bool, inner_status: str) -> bool:
    """Unboundedness is certified only from a nonlinearly feasible point."""
    return inner_status == UNBOUNDED and x_k_feasible


def _initial_sigma(opts: OuterOptions, y0: Vector) -> float:
    if opts.mode == CANONICAL:
        return opts.sigma_hi
    if opts.mode == BCL:
        return 0.0
    y_norm = float(np.abs(y0).max(initial=0.0))
    return min(opts.sigma_hi, max(opts.sigma_lo, opts.sigma_0 * (1.0 + y_norm)))


def _default_rho(opts: OuterOptions, m_c: int) -> float:
    if opts.rho_0 is not None:
        return max(opts.rho_0, 1.0 + 1e-3)
    return max(10.0 ** 2.5 / max(m_c, 1), 1.0 + 1e-3)


def _make_report(status: str, sf: SlackForm, x_ext: Vector, y: Vector, z: Vector,
                 majors: int, minors: int, fev0: int, trace: list[TraceRecord],
                 f_norm_path: list[float]) -> SolveReport:
    res = kkt_residual(sf, x_ext, y, z)
    f_val = sf.objective(x_ext)
    # counted last so the report's own evaluations are included
    fevals = sf.nlp.eval_total() - fev0
    return SolveReport(status=status, x=np.array(x_ext[:sf.n]), x_ext=np.array(x_ext),
                       y=np.array(y), z=np.array(z), residual=res,
                       final_objective=f_val, majors=majors, minors=minors,
                       fevals=fevals, trace=trace, f_norm_path=f_norm_path)


def _solve_linear_only(sf: SlackForm, x0: Vector, y0: Vector, opts: OuterOptions,
                       fev0: int) -> SolveReport:
    """Problems with no nonlinear rows need a single subproblem at sigma = 0."""
    lin = linearize_constraints(sf, x0)
    sub = assemble_elastic(lin, y0, 0.0, 0.0)
    inner = replace(opts.inner, omega=opts.omega_star)
    sol = solve_lc(sub, inner)
    y = y0 + sol.delta_y
    z = np.array(sol.z_star)
    status = {CONVERGED: OPTIMAL, UNBOUNDED: UNBOUNDED_STATUS,
              ITERATION_LIMIT: ITERATION_LIMIT_STATUS}[sol.status]
    if status == OPTIMAL:
        res = kkt_residual(sf, sol.x_star, y, z)
        if not is_optimal(res, opts.omega_star, opts.eta_star):
            status = CANNOT_IMPROVE
    return _make_report(status, sf, sol.x_star, y, z, majors=0,
                        minors=sol.inner_iterations, fev0=fev0, trace=[],
                        f_norm_path=[])


def solve(problem: NlpProblem, opts: OuterOptions | None = None,
          x_start: Vector | None = None,
          y_start: Vector | None = None) -> SolveReport:
    """Run the outer loop on a problem and return the full report."""
    opts = opts if opts is not None else OuterOptions()
    sf = build_slack_form(problem)
    fev0 = problem.eval_total()

    x_tilde = problem.x_tilde if x_start is None else np.asarray(x_start, dtype=float)
    probe = push_interior(x_tilde, *problem.bounds_x, margin=2e-5)
    deriv = check_derivatives(problem, probe)
    if not deriv.passed:
        raise ValueError(
            f"derivative check failed at the start point: worst {deriv.worst_index} "
            f"(g err {deriv.max_rel_err_g:.2e}, J err {deriv.max_rel_err_J:.2e})")

    try:
        x0 = solve_proximal(sf, x_tilde, opts.pp_variant)
    except PpInfeasible:
        x_ext = sf.embed(np.clip(x_tilde, *problem.bounds_x))
        return _make_report(INFEASIBLE, sf, x_ext, np.zeros(sf.m),
                            np.zeros(sf.n_ext), majors=0, minors=0,
                            fev0=fev0, trace=[], f_norm_path=[])

    y = np.zeros(sf.m) if y_start is None else np.asarray(y_start, dtype=float).reshape(sf.m)
    z = sf.objective_grad(x0) - sf.jacobian(x0).T @ y

    if sf.m_c == 0:
        return _solve_linear_only(sf, x0, y, opts, fev0)

    state = OuterState(k=0, x=x0, y=y, z=z,
                       rho=_default_rho(opts, sf.m_c),
                       sigma=_initial_sigma(opts, y),
                       eta=opts.eta_0, omega=opts.omega_0)
    res0 = kkt_residual(sf, state.x, state.y, state.z)
    f_norm_path = [res0.f_norm]
    minors = 0
    warm: SubproblemSolution | None = None
    stalls_at_floor = 0
    status = ITERATION_LIMIT_STATUS
    final_from_candidate: SubproblemSolution | None = None

    for k in range(opts.max_major):
        state.k = k
        rho_k, sigma_k, eta_k, omega_k = state.rho, state.sigma, state.eta, state.omega
        lin = linearize_constraints(sf, state.x)
        sub = assemble_elastic(lin, state.y, rho_k, sigma_k)
        inner = replace(opts.inner, omega=omega_k)
        sol = solve_lc(sub, inner, warm_start=warm)
        minors += sol.inner_iterations

        c_star = sf.residual(sol.x_star)
        c_norm = float(np.abs(c_star).max(initial=0.0))
        dy_norm = float(np.abs(sol.delta_y[:sf.m_c]).max(initial=0.0))
        elastic_inf = (float(np.abs(sol.v_star).max(initial=0.0))
                       + float(np.abs(sol.w_star).max(initial=0.0)))

        exit_status: str | None = None
        if sol.status == UNBOUNDED:
            feasible_here = sf.nonlinear_bound_violation(state.x) <= opts.eta_star
            if detect_unbounded(feasible_here, sol.status):
                exit_status = UNBOUNDED_STATUS
                accepted = False
            else:
                accepted = False
        elif sol.status == ITERATION_LIMIT:
            accepted = False
            if opts.mode == CANONICAL:
                # with a fixed penalty nothing about the subproblem will change
                exit_status = CANNOT_IMPROVE
            elif omega_k <= opts.omega_star * (1.0 + 1e-12):
                stalls_at_floor += 1
                if stalls_at_floor >= 2:
                    exit_status = CANNOT_IMPROVE
        else:
            stalls_at_floor = 0
            accepted = (opts.mode == CANONICAL or
                        c_norm <= max(opts.eta_star, eta_k))

        if accepted:
            update_on_success(state, sol, c_star, opts)
            if opts.z_update == "recompute":
                state.z = sf.objective_grad(state.x) - sf.jacobian(state.x).T @ state.y
            res = kkt_residual(sf, state.x, state.y, state.z)
            if is_optimal(res, opts.omega_star, opts.eta_star):
                exit_status = OPTIMAL
            if opts.mode == CANONICAL and elastic_inf > 1e-5:
                # the canonical mode has no way to recover from a linearization
                # it cannot satisfy without elastic help
                exit_status = CANNOT_IMPROVE
        else:
            if exit_status is None and sol.status == CONVERGED:
                viol = sf.nonlinear_bound_violation(sol.x_star)
                if detect_infeasible(viol, rho_k, opts):
                    exit_status = INFEASIBLE
                    final_from_candidate = sol
            if exit_status is None:
                update_on_failure(state, opts)
            res = kkt_residual(sf, state.x, state.y, state.z)

        f_norm_path.append(res.f_norm)
        state.omega = next_omega(omega_k, res.f_norm, opts.omega_star)
        state.trace.append(TraceRecord(
            k=k, accepted=accepted, rho=rho_k, sigma=sigma_k, eta=eta_k,
            omega=omega_k, c_norm=c_norm, f_norm=res.f_norm,
            inner_status=sol.status, inner_iterations=sol.inner_iterations,
            delta_y_norm=dy_norm, elastic_inf=elastic_inf,
            objective=sf.objective(sol.x_star),
            rho_next=state.rho, sigma_next=state.sigma, eta_next=state.eta,
            omega_next=state.omega))
        warm = sol

        if exit_status is not None:
            status = exit_status
            break
    else:
        status = ITERATION_LIMIT_STATUS

    if status == INFEASIBLE and final_from_candidate is not None:
        # report the candidate itself: it is the stationary point of the
        # squared-residual problem that certifies the infeasibility
        state.x = np.array(final_from_candidate.x_star)
        state.y = state.y + final_from_candidate.delta_y
        state.z = np.array(final_from_candidate.z_star)

    return _make_report(status, sf, state.x, state.y, state.z,
                        majors=state.k + 1 if state.trace else 0, minors=minors,
                        fev0=fev0, trace=state.trace, f_norm_path=f_norm_path)
