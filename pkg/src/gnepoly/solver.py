"""Equilibrium search: randomized objective, the moment-relaxation loop,
per-player optimality checks, and the exclusion restart.

The pipeline solves the multiplier-eliminated KKT system by a hierarchy of
moment relaxations, reads candidates off the degree-one moments, verifies
candidates player by player (each check is itself a small hierarchy with
flat-truncation extraction), and on failure excludes the bad candidate by
bounding the offending denominators away from zero and re-solving.  One
exclusion restart and one redraw of the random objective are attempted
before reporting the run inconclusive.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .extraction import ExtractionError, Tms, extract_minimizers, flat_truncation_check, \
    moment_matrix_from_tms, numeric_rank
from .model import GnepProblem, feasibility_violation, validate
from .momentsos import (PolySystem, build_check_problem, build_kkt_system,
                        build_moment_relaxation, solve_moment_relaxation)
from .polynomials import Polynomial, monomial_basis
from . import sdp

GNE_FOUND = "GneFound"
NO_KKT_POINTS = "NoKktPoints"
INCONCLUSIVE = "Inconclusive"


class SolverError(ValueError):
    pass


@dataclass
class SolverConfig:
    seed: int = 0
    max_order_increment: int = 3
    epsilon: float = 0.1
    delta_min: float = -1e-6
    feas_tol: float = 1e-6
    rank_tol: float = 1e-6
    sdp_options: sdp.SdpOptions = field(default_factory=sdp.SdpOptions)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise SolverError("epsilon must be positive")
        if self.delta_min > 0:
            raise SolverError("delta_min must be nonpositive")


def random_theta(seed: int, dim: int) -> np.ndarray:
    """Seeded positive definite objective matrix R'R + 1e-6 I."""
    if dim < 1:
        raise SolverError("theta dimension must be at least 1")
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((dim, dim))
    return R.T @ R + 1e-6 * np.eye(dim)


def theta_polynomial(space, theta: np.ndarray) -> Polynomial:
    """[z]_1' Theta [z]_1 over the given space."""
    basis = monomial_basis(space, None, 1)
    if theta.shape != (len(basis), len(basis)):
        raise SolverError(f"theta must be {len(basis)} x {len(basis)}")
    out = Polynomial.zero(space)
    for a in range(len(basis)):
        for b in range(len(basis)):
            if theta[a, b]:
                e = tuple(x + z for x, z in zip(basis[a], basis[b]))
                out = out + Polynomial(space, {e: theta[a, b]})
    return out


@dataclass
class OrderRecord:
    order: int
    status: str
    value: float | None
    feasibility: float | None
    gap: float | None
    seconds: float


@dataclass
class KktOutcome:
    status: str                    # "minimizer" | "no-kkt" | "inconclusive"
    point: np.ndarray | None       # full (x, w) vector
    value: float | None
    order: int | None
    moments: Tms | None
    certificate: dict | None
    records: list


def polish_candidate(sys: PolySystem, x0: np.ndarray,
                     active_tol: float = 1e-3) -> np.ndarray:
    """Damped Gauss-Newton refinement of a near-solution of the system.

    Interior-point candidates carry O(sqrt(gap)) noise; a few local steps on
    the equality rows plus the near-active inequality rows recover full
    precision.  Returns the input when no improvement is found.
    """
    rows = [p for p in sys.equalities if not p.is_zero()]
    for q in sys.inequalities:
        if not q.is_zero() and abs(q.eval(x0)) <= active_tol:
            rows.append(q)
    if not rows:
        return x0
    l = sys.space.total_dim
    grads = [[p.diff(c) for c in range(l)] for p in rows]

    def residual(x):
        return np.array([p.eval(x) for p in rows])

    x = x0.copy()
    fx = residual(x)
    norm = np.abs(fx).max()
    for _ in range(20):
        if norm <= 1e-13:
            break
        J = np.array([[g.eval(x) for g in row] for row in grads])
        step, *_ = np.linalg.lstsq(J, -fx, rcond=None)
        alpha = 1.0
        improved = False
        for _ in range(8):
            xn = x + alpha * step
            fn = residual(xn)
            if np.abs(fn).max() < norm:
                x, fx, norm = xn, fn, np.abs(fn).max()
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
    # never trade polynomial feasibility for inequality violations
    eq0, in0 = sys.residuals(x0)
    eq1, in1 = sys.residuals(x)
    return x if max(eq1, in1) <= max(eq0, in0) else x0


def solve_kkt_optimization(sys: PolySystem, theta: Polynomial,
                           config: SolverConfig) -> KktOutcome:
    """Relaxation loop: infeasibility certifies absence of KKT points; a
    candidate is accepted when its degree-one moments are feasible for the
    polynomial system and close the relaxation gap."""
    sys = replace(sys, objective=theta)
    d0 = sys.base_order()
    records = []
    best = None
    l = sys.space.total_dim
    for k in range(d0, d0 + config.max_order_increment + 1):
        t0 = time.perf_counter()
        rel = build_moment_relaxation(sys, k)
        sol = solve_moment_relaxation(rel, config.sdp_options)
        dt = time.perf_counter() - t0
        if sol.status == sdp.PRIMAL_INFEASIBLE:
            cert = sol.sdp_solution.certificate if sol.sdp_solution else None
            records.append(OrderRecord(k, sol.status, None, None, None, dt))
            return KktOutcome("no-kkt", None, None, k, None, cert, records)
        if sol.y is None:
            records.append(OrderRecord(k, sol.status, sol.value, None, None, dt))
            continue
        xt = polish_candidate(sys, sol.y.values[1:l + 1].copy())
        eq_res, ineq_res = sys.residuals(xt)
        feas = max(eq_res, ineq_res)
        gap = theta.eval(xt) - sol.value
        records.append(OrderRecord(k, sol.status, sol.value, feas, gap, dt))
        candidate = (max(feas, gap), k, xt, sol)
        if best is None or candidate[0] < best[0]:
            best = candidate
        # Feasibility is certified by direct evaluation at 1e-6; the match
        # with the relaxation bound is certified up to the SDP's value
        # accuracy (the later per-player verification is what makes the
        # final answer rigorous).  A loose dual residual does not block
        # acceptance for the same reason.
        gap_tol = max(config.feas_tol, 2e-3 * (1.0 + abs(sol.value)))
        primal_ok = (sol.status == sdp.OPTIMAL
                     or sol.sdp_solution.primal_accuracy() <= 10 * config.feas_tol)
        if feas <= config.feas_tol and gap <= gap_tol and primal_ok:
            return KktOutcome("minimizer", xt, sol.value, k, sol.y, None, records)
    if best is not None:
        _, k, xt, sol = best
        return KktOutcome("inconclusive", xt, sol.value, k, sol.y, None, records)
    return KktOutcome("inconclusive", None, None, None, None, None, records)


@dataclass
class PlayerCheck:
    player: int
    delta: float | None
    certified: bool
    order: int | None
    minimizers: list
    records: list


def check_gne(problem: GnepProblem, u, expressions,
              config: SolverConfig) -> dict[int, PlayerCheck]:
    """Optimality checks for every player whose denominator vanishes at u.

    delta_i = 0 is declared as soon as a relaxation bound clears -1e-9; a
    negative delta_i is only reported once flat truncation certifies it and
    minimizers are extracted."""
    uvec = np.asarray(u, dtype=float).ravel()
    n = problem.space.total_dim
    checks = {}
    for i, expr in enumerate(expressions):
        qv = _q_value(expr, uvec[:n])
        if qv > 1e-8:
            continue
        checks[i] = _check_player(problem, i, uvec[:n], expr, config)
    return checks


def _q_value(expr, x: np.ndarray) -> float:
    pad = expr.q.space.total_dim - x.shape[0]
    pt = np.concatenate([x, np.zeros(pad)]) if pad else x
    return expr.q.eval(pt)


def _check_player(problem, i, u, expr, config: SolverConfig) -> PlayerCheck:
    sys = build_check_problem(problem, i, u, expr, feas_tol=10 * config.feas_tol)
    d_i = sys.base_order()
    records = []
    last_value = None
    for k in range(d_i, d_i + config.max_order_increment + 1):
        t0 = time.perf_counter()
        rel = build_moment_relaxation(sys, k)
        sol = solve_moment_relaxation(rel, config.sdp_options)
        dt = time.perf_counter() - t0
        records.append(OrderRecord(k, sol.status, sol.value, None, None, dt))
        if sol.value is not None:
            last_value = sol.value
        if sol.status == sdp.PRIMAL_INFEASIBLE:
            # u_i itself is feasible, so this signals numerical failure
            continue
        if sol.value is None or sol.y is None:
            continue
        if sol.value >= -1e-9:
            return PlayerCheck(i, 0.0, True, k, [], records)
        for t in range(d_i, k + 1):
            try:
                if not flat_truncation_check(sol.y, d_i, t, config.rank_tol):
                    continue
                Mt = moment_matrix_from_tms(sol.y, t)
                r = numeric_rank(Mt, config.rank_tol)
                res = extract_minimizers(sol.y, t, r, seed=config.seed,
                                         tol=config.rank_tol)
            except ExtractionError:
                continue
            delta = min(sys.objective.eval(pt) for pt in res.points)
            return PlayerCheck(i, float(delta), True, k, res.points, records)
    return PlayerCheck(i, last_value, False, None, [], records)


@dataclass
class StageReport:
    name: str
    outcome: KktOutcome
    candidate: np.ndarray | None
    q_values: list
    checks: dict
    seconds: float


@dataclass
class SolveReport:
    outcome: str
    u: np.ndarray | None
    omega: np.ndarray | None
    q_values: list
    deltas: dict
    feasibility: float | None
    orders_used: list
    restarts: int
    certificate: dict | None
    certificate_order: int | None
    stages: list
    seed: int
    total_seconds: float


def solve_gnep(problem: GnepProblem, expressions,
               config: SolverConfig | None = None) -> SolveReport:
    """Full pipeline: solve, verify, restart with exclusion bounds, redraw."""
    config = config or SolverConfig()
    diags = validate(problem)
    if diags:
        raise SolverError("invalid problem: " + "; ".join(diags))
    start = time.perf_counter()
    base_sys = build_kkt_system(problem, expressions)
    n = problem.space.total_dim
    s = base_sys.space.total_dim - n
    theta = theta_polynomial(base_sys.space, random_theta(config.seed, n + s + 1))

    stages = []
    restarts = 0

    def run_stage(name, sys, theta_poly):
        t0 = time.perf_counter()
        outcome = solve_kkt_optimization(sys, theta_poly, config)
        cand = outcome.point
        qvals, checks = [], {}
        if outcome.status == "minimizer":
            qvals = [_q_value(e, cand[:n]) for e in expressions]
            checks = check_gne(problem, cand[:n], expressions, config)
        stage = StageReport(name, outcome, cand, qvals, checks,
                            time.perf_counter() - t0)
        stages.append(stage)
        return stage

    def finish(outcome, stage):
        cand = stage.candidate if stage else None
        u = cand[:n] if cand is not None else None
        omega = cand[n:] if cand is not None and s else (
            np.zeros(0) if cand is not None else None)
        deltas = {}
        if stage:
            deltas = {i + 1: c.delta for i, c in stage.checks.items()}
        cert, cert_k = None, None
        if outcome == NO_KKT_POINTS and stage:
            cert = stage.outcome.certificate
            cert_k = stage.outcome.order
        return SolveReport(
            outcome, u, omega,
            stage.q_values if stage else [],
            deltas,
            feasibility_violation(problem, u) if u is not None else None,
            [r.order for st in stages for r in st.outcome.records],
            restarts, cert, cert_k, stages, config.seed,
            time.perf_counter() - start)

    def stage_verdict(stage):
        """'gne' | 'bad-candidate' | 'no-kkt' | 'inconclusive'"""
        if stage.outcome.status == "no-kkt":
            return "no-kkt"
        if stage.outcome.status != "minimizer":
            return "inconclusive"
        for c in stage.checks.values():
            if not c.certified:
                return "inconclusive"
            if c.delta < config.delta_min:
                return "bad-candidate"
        return "gne"

    stage = run_stage("initial", base_sys, theta)
    verdict = stage_verdict(stage)
    if verdict == "gne":
        return finish(GNE_FOUND, stage)
    if verdict == "no-kkt":
        return finish(NO_KKT_POINTS, stage)

    if verdict == "bad-candidate":
        bad = [i for i, c in stage.checks.items()
               if c.certified and c.delta < config.delta_min]
        restarts += 1
        restart_sys = build_kkt_system(problem, expressions,
                                       eps_set=(bad, config.epsilon))
        stage2 = run_stage("restart", restart_sys, theta)
        verdict2 = stage_verdict(stage2)
        if verdict2 == "gne":
            return finish(GNE_FOUND, stage2)
        if verdict2 == "no-kkt":
            # the restart cut away the whole feasible set; fall through to a
            # fresh objective on the original system
            pass

    theta2 = theta_polynomial(base_sys.space,
                              random_theta(config.seed + 1, n + s + 1))
    stage3 = run_stage("redraw", base_sys, theta2)
    verdict3 = stage_verdict(stage3)
    if verdict3 == "gne":
        return finish(GNE_FOUND, stage3)
    if verdict3 == "no-kkt":
        return finish(NO_KKT_POINTS, stage3)
    return finish(INCONCLUSIVE, stage3)
