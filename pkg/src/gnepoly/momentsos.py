"""Moment relaxations and SOS membership programs for polynomial systems.

A PolySystem is a constrained polynomial problem (equalities Phi,
inequalities Psi, objective theta).  `build_moment_relaxation` turns it into
an order-k semidefinite program over the truncated moment vector; equality
constraints enter as the full set of localizing equations (scalar rows, one
per shifted monomial, which is the deduplicated matrix form).
`build_kkt_system` and `build_check_problem` assemble the polynomial systems
whose solutions are equilibrium candidates and per-player optimality checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .extraction import Tms, moment_matrix_from_tms
from .model import GnepProblem, StrategyTuple, feasibility_violation
from .polynomials import (Polynomial, VariableSpace, monomial_basis)
from . import sdp


class RelaxationError(ValueError):
    pass


@dataclass(frozen=True)
class PolySystem:
    """Equalities, inequalities and objective over one variable space."""

    space: VariableSpace
    equalities: tuple
    inequalities: tuple
    objective: Polynomial

    def __post_init__(self):
        for p in list(self.equalities) + list(self.inequalities) + [self.objective]:
            if p.space != self.space:
                raise RelaxationError("system polynomial in a foreign space")

    def base_order(self) -> int:
        degs = [p.degree() for p in self.equalities + self.inequalities
                if not p.is_zero()]
        degs.append(self.objective.degree())
        return max(1, max((d + 1) // 2 for d in degs) if degs else 1)

    def residuals(self, point) -> tuple[float, float]:
        """(max |equality|, worst inequality deficit) at a point."""
        eq = max((abs(p.eval(point)) for p in self.equalities), default=0.0)
        ineq = max((-q.eval(point) for q in self.inequalities), default=0.0)
        return eq, ineq


# -- localizing and moment matrices over numeric moment vectors ------------------

def localizing_matrix(q: Polynomial, y: Tms, k: int) -> np.ndarray:
    """L_q^{(k)}[y]: entry (a,b) = sum_g q_g * y_{a+b+g}."""
    if q.space.total_dim != y.num_vars:
        raise RelaxationError("polynomial and moment vector dimensions differ")
    dq = q.degree()
    if dq > 2 * k:
        raise RelaxationError(f"deg(q)={dq} exceeds 2k={2 * k}")
    if y.degree < 2 * k:
        raise RelaxationError(f"moment vector degree {y.degree} below 2k")
    t = k - (dq + 1) // 2
    basis = monomial_basis(q.space, None, t)
    n = len(basis)
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            acc = 0.0
            for g, c in q.terms.items():
                e = tuple(a + b + gg for a, b, gg in zip(basis[i], basis[j], g))
                acc += c * y.moment(e)
            M[i, j] = M[j, i] = acc
    return M


def moment_matrix(y: Tms, k: int) -> np.ndarray:
    """M_k[y], the localizing matrix of the constant one polynomial."""
    return moment_matrix_from_tms(y, k)


# -- Ideal/Qmod truncation template ----------------------------------------------

@dataclass
class QmodTemplate:
    """Variable layout for Ideal[eq]_{2d} + Qmod[ineq]_{2d} memberships.

    Decision variables: free multiplier coefficients for each equality
    generator and Gram matrix entries (i<=j) for the SOS term of each
    inequality generator (the constant one generator leads).  `rows()`
    yields the sparse linear map from variables to the coefficient vector
    over the degree <= 2d monomial basis.
    """

    space: VariableSpace
    two_d: int
    eq_gens: tuple
    ineq_gens: tuple
    basis: list = field(default_factory=list)
    index: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)
    num_vars: int = 0

    def __post_init__(self):
        if self.two_d % 2:
            raise RelaxationError("truncation degree must be even")
        d = self.two_d // 2
        self.basis = monomial_basis(self.space, None, self.two_d)
        self.index = {e: i for i, e in enumerate(self.basis)}
        off = 0
        for h in self.eq_gens:
            dh = self.two_d - h.degree()
            if dh < 0:
                raise RelaxationError("equality generator degree exceeds truncation")
            mult_basis = monomial_basis(self.space, None, dh)
            self.blocks.append(("free", h, mult_basis, off))
            off += len(mult_basis)
        for g in [Polynomial.constant(self.space, 1.0)] + list(self.ineq_gens):
            tg = d - (g.degree() + 1) // 2
            if tg < 0:
                raise RelaxationError("inequality generator degree exceeds truncation")
            gb = monomial_basis(self.space, None, tg)
            self.blocks.append(("gram", g, gb, off))
            off += len(gb) * (len(gb) + 1) // 2
        self.num_vars = off

    def rows(self):
        """Yield (row_index, var_index, coeff) triplets of the linear map."""
        for kind, gen, gbasis, off in self.blocks:
            if kind == "free":
                for bi, beta in enumerate(gbasis):
                    var = off + bi
                    for alpha, c in gen.terms.items():
                        e = tuple(a + b for a, b in zip(alpha, beta))
                        yield self.index[e], var, c
            else:
                nb = len(gbasis)
                var = off
                for a in range(nb):
                    for b in range(a, nb):
                        w = 1.0 if a == b else 2.0
                        for gamma, c in gen.terms.items():
                            e = tuple(x + z + gg for x, z, gg in
                                      zip(gbasis[a], gbasis[b], gamma))
                            yield self.index[e], var, w * c
                        var += 1

    def gram_blocks(self):
        """(generator, basis, var_offset, size) for every Gram block."""
        out = []
        for kind, gen, gbasis, off in self.blocks:
            if kind == "gram":
                out.append((gen, gbasis, off, len(gbasis)))
        return out

    def free_blocks(self):
        out = []
        for kind, gen, gbasis, off in self.blocks:
            if kind == "free":
                out.append((gen, gbasis, off, len(gbasis)))
        return out


@dataclass
class SosMembership:
    """Result of a membership solve: target = ideal part + SOS part."""

    feasible: bool
    multipliers: list          # (h, polynomial) pairs
    sos_terms: list            # (g, gram matrix, basis) triples
    residual: float
    certificate: dict | None
    status: str


def build_sos_membership(target: Polynomial, eq_gens, ineq_gens, two_d: int,
                         opts: sdp.SdpOptions | None = None) -> SosMembership:
    """Decide target in Ideal[eq]_{2d} + Qmod[ineq]_{2d} and reconstruct."""
    if target.degree() > two_d:
        raise RelaxationError("target degree exceeds the truncation")
    tpl = QmodTemplate(target.space, two_d, tuple(eq_gens), tuple(ineq_gens))
    builder = sdp.SdpBuilder(max(tpl.num_vars, 1))
    rows: dict[int, list] = {}
    for ridx, var, c in tpl.rows():
        rows.setdefault(ridx, []).append((var, c))
    zero_rows = []
    for ridx, e in enumerate(tpl.basis):
        t = target.terms.get(e, 0.0)
        entries = rows.get(ridx, [])
        if not entries and t == 0.0:
            continue
        zero_rows.append((-t, entries))
    builder.add_linear_block(sdp.ZERO, zero_rows)
    for gen, gbasis, off, nb in tpl.gram_blocks():
        trip = []
        var = off
        for a in range(nb):
            for b in range(a, nb):
                trip.append((a, b, var, 1.0))
                var += 1
        builder.add_psd_block(nb, trip)
    sol = sdp.solve_sdp(builder.build(), opts)
    if sol.status != sdp.OPTIMAL:
        cert = sol.certificate if sol.status == sdp.PRIMAL_INFEASIBLE else None
        return SosMembership(False, [], [], math.inf, cert, sol.status)
    x = sol.x
    multipliers = []
    for h, hb, off, nb in tpl.free_blocks():
        terms = {}
        for bi, beta in enumerate(hb):
            c = x[off + bi]
            terms[beta] = terms.get(beta, 0.0) + c
        multipliers.append((h, Polynomial(target.space, terms)))
    sos_terms = []
    recon = Polynomial.zero(target.space)
    for h, mult in multipliers:
        recon = recon + h * mult
    for gen, gbasis, off, nb in tpl.gram_blocks():
        G = np.zeros((nb, nb))
        var = off
        for a in range(nb):
            for b in range(a, nb):
                G[a, b] = G[b, a] = x[var]
                var += 1
        sos_terms.append((gen, G, gbasis))
        sigma = Polynomial.zero(target.space)
        for a in range(nb):
            for b in range(nb):
                if G[a, b] == 0.0:
                    continue
                e = tuple(p + q for p, q in zip(gbasis[a], gbasis[b]))
                sigma = sigma + Polynomial(target.space, {e: G[a, b]})
        recon = recon + gen * sigma
    diff = target - recon
    residual = diff.max_abs_coeff()
    return SosMembership(True, multipliers, sos_terms, residual, None, sol.status)


# -- KKT polynomial systems -------------------------------------------------------

def joint_space(problem: GnepProblem, expressions) -> VariableSpace:
    """x-blocks for all players plus w-blocks for parametric expressions."""
    blocks = [(f"x[{i + 1}]", p.dim) for i, p in enumerate(problem.players)]
    for i, e in enumerate(expressions):
        if e.num_params > 0:
            blocks.append((f"w[{i + 1}]", e.num_params))
    return VariableSpace(blocks)


def build_kkt_system(problem: GnepProblem, expressions,
                     eps_set: tuple | None = None) -> PolySystem:
    """Assemble the multiplier-eliminated KKT system of all players.

    Phi gathers, per player: the weighted stationarity rows
    q_i grad f_i - sum_j lam_ij grad g_ij, the equality constraints, and the
    complementarity products lam_ij * g_ij over inequality constraints.
    Psi gathers g_ij and lam_ij over inequality constraints.  With
    eps_set = (players, eps), the bounds q_i - eps >= 0 are appended to Psi.
    """
    if len(expressions) != problem.num_players:
        raise RelaxationError(
            f"{len(expressions)} expressions for {problem.num_players} players")
    space = joint_space(problem, expressions)
    phi: list[Polynomial] = []
    psi: list[Polynomial] = []
    for i, (player, expr) in enumerate(zip(problem.players, expressions)):
        if expr.num_multipliers != player.num_constraints:
            raise RelaxationError(
                f"player {i + 1}: expression has {expr.num_multipliers} multipliers "
                f"for {player.num_constraints} constraints")
        f = player.objective.embed(space)
        gs = [g.embed(space) for g in player.constraints]
        lams = [lam.embed(space) for lam in expr.lambda_hat]
        q = expr.q.embed(space)
        block = problem.block_name(i)
        grad_f = f.gradient(block)
        grad_gs = [g.gradient(block) for g in gs]
        for c in range(player.dim):
            row = q * grad_f[c]
            for j in range(player.num_constraints):
                row = row - lams[j] * grad_gs[j][c]
            phi.append(row)
        for j in sorted(player.eq_set):
            phi.append(gs[j])
        for j in sorted(player.ineq_set):
            phi.append(lams[j] * gs[j])
        for j in sorted(player.ineq_set):
            psi.append(gs[j])
        for j in sorted(player.ineq_set):
            psi.append(lams[j])
    if eps_set is not None:
        players, eps = eps_set
        if eps <= 0:
            raise RelaxationError(f"restart margin must be positive, got {eps}")
        for i in sorted(players):
            psi.append(expressions[i].q.embed(space) - eps)
    return PolySystem(space, tuple(phi), tuple(psi),
                      Polynomial.zero(space))


def build_check_problem(problem: GnepProblem, i: int, u,
                        expression, feas_tol: float = 1e-6) -> PolySystem:
    """Player i's optimality-check system with the other players frozen at u.

    The objective is f_i(x_i, u_{-i}) - f_i(u); equalities and inequalities
    are the frozen KKT rows built from the player's multiplier expression.
    Parameters w_i stay free variables for parametric expressions.
    """
    if isinstance(u, StrategyTuple):
        uvec = u.x
    else:
        uvec = np.asarray(u, dtype=float).ravel()
    xi = feasibility_violation(problem, uvec)
    if xi > feas_tol:
        raise RelaxationError(f"candidate is infeasible (violation {xi:.3e})")
    player = problem.players[i]
    expr = expression
    full = joint_space(problem, [_DummyExpr(problem, j, expr, i) for j in
                                 range(problem.num_players)])
    blocks = [(f"x[{i + 1}]", player.dim)]
    if expr.num_params > 0:
        blocks.append((f"w[{i + 1}]", expr.num_params))
    target = VariableSpace(blocks)
    keep = list(full.block_indices(f"x[{i + 1}]"))
    if expr.num_params > 0:
        keep += list(full.block_indices(f"w[{i + 1}]"))
    values = {}
    pos = 0
    for j, p in enumerate(problem.players):
        for c in full.block_indices(f"x[{j + 1}]"):
            if j != i:
                values[c] = uvec[pos]
            pos += 1

    def freeze(p: Polynomial) -> Polynomial:
        return p.embed(full).substitute(values, target, keep)

    f_frozen = freeze(player.objective)
    f_at_u = player.objective.eval(uvec[:problem.space.total_dim])
    zeta = f_frozen - f_at_u
    gs = [freeze(g) for g in player.constraints]
    lams = [freeze(lam) for lam in expr.lambda_hat]
    qf = freeze(expr.q)
    grad_f = f_frozen.gradient(f"x[{i + 1}]")
    grad_gs = [g.gradient(f"x[{i + 1}]") for g in gs]
    phi: list[Polynomial] = []
    for j in sorted(player.eq_set):
        phi.append(gs[j])
    for j in sorted(player.ineq_set):
        phi.append(lams[j] * gs[j])
    for c in range(player.dim):
        row = qf * grad_f[c]
        for j in range(player.num_constraints):
            row = row - lams[j] * grad_gs[j][c]
        phi.append(row)
    psi = [gs[j] for j in sorted(player.ineq_set)]
    psi += [lams[j] for j in sorted(player.ineq_set)]
    return PolySystem(target, tuple(phi), tuple(psi), zeta)


class _DummyExpr:
    """Stands in for other players when computing the joint space of one
    player's check problem (only player i's parameters are relevant)."""

    def __init__(self, problem, j, expr, i):
        self.num_params = expr.num_params if j == i else 0
        self.num_multipliers = problem.players[j].num_constraints


# -- moment relaxation -------------------------------------------------------------

@dataclass
class MomentRelaxation:
    order: int
    system: PolySystem
    basis: list
    index: dict
    problem: sdp.SdpProblem
    trivially_infeasible: bool = False

    @property
    def num_moments(self) -> int:
        return len(self.basis)

    def tms(self, x: np.ndarray) -> Tms:
        return Tms(self.system.space.total_dim, 2 * self.order, x)

    def point_moments(self, point) -> np.ndarray:
        return Tms.from_point(point, 2 * self.order).values

    def export_text(self) -> str:
        return sdp.problem_to_text(self.problem)


def build_moment_relaxation(sys: PolySystem, k: int) -> MomentRelaxation:
    """Order-k moment relaxation: minimize <theta,y> subject to y_0 = 1,
    localizing equations for Phi, and PSD moment/localizing blocks."""
    d0 = sys.base_order()
    if k < d0:
        raise RelaxationError(f"order {k} below the base order {d0}")
    space = sys.space
    l = space.total_dim
    basis = monomial_basis(space, None, 2 * k)
    index = {e: i for i, e in enumerate(basis)}
    builder = sdp.SdpBuilder(len(basis))
    for e, c in sys.objective.terms.items():
        builder.add_objective(index[e], c)
    rows = [(-1.0, [(0, 1.0)])]  # y_0 = 1
    seen_eq = set()
    infeasible = False
    for p in sys.equalities:
        if p.is_zero():
            continue
        key = frozenset(p.terms.items())
        if key in seen_eq:
            continue
        seen_eq.add(key)
        t = k - (p.degree() + 1) // 2
        for gamma in monomial_basis(space, None, 2 * t):
            entries = [(index[tuple(a + b for a, b in zip(alpha, gamma))], c)
                       for alpha, c in p.terms.items()]
            rows.append((0.0, entries))
    builder.add_linear_block(sdp.ZERO, rows)
    # moment matrix block
    mb = monomial_basis(space, None, k)
    trip = []
    for a in range(len(mb)):
        for b in range(a, len(mb)):
            trip.append((a, b, index[tuple(x + z for x, z in zip(mb[a], mb[b]))], 1.0))
    builder.add_psd_block(len(mb), trip)
    nonneg_rows = []
    seen_ineq = set()
    for q in sys.inequalities:
        if q.is_zero():
            continue
        if q.degree() == 0:
            if q.constant_term() < 0:
                infeasible = True
            continue
        key = frozenset(q.terms.items())
        if key in seen_ineq:
            continue
        seen_ineq.add(key)
        t = k - (q.degree() + 1) // 2
        qb = monomial_basis(space, None, t)
        if len(qb) == 1:
            nonneg_rows.append((0.0, [(index[g], c) for g, c in q.terms.items()]))
            continue
        trip = []
        for a in range(len(qb)):
            for b in range(a, len(qb)):
                for g, c in q.terms.items():
                    e = tuple(x + z + gg for x, z, gg in zip(qb[a], qb[b], g))
                    trip.append((a, b, index[e], c))
        builder.add_psd_block(len(qb), trip)
    if nonneg_rows:
        builder.add_linear_block(sdp.NONNEG, nonneg_rows)
    return MomentRelaxation(k, sys, basis, index, builder.build(),
                            trivially_infeasible=infeasible)


@dataclass
class MomentSolution:
    status: str
    value: float | None
    y: Tms | None
    sdp_solution: sdp.SdpSolution | None


def solve_moment_relaxation(rel: MomentRelaxation,
                            opts: sdp.SdpOptions | None = None) -> MomentSolution:
    if rel.trivially_infeasible:
        return MomentSolution(sdp.PRIMAL_INFEASIBLE, None, None, None)
    sol = sdp.solve_sdp(rel.problem, opts)
    if sol.status == sdp.OPTIMAL:
        return MomentSolution(sol.status, sol.primal_objective, rel.tms(sol.x), sol)
    if sol.status == sdp.INACCURATE and sol.x is not None:
        return MomentSolution(sol.status, sol.primal_objective, rel.tms(sol.x), sol)
    return MomentSolution(sol.status, None, None, sol)
