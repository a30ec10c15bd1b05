"""Lagrange multiplier expressions: adjugate construction, SOS search,
parametric templates, and numeric verification.

An expression gives each multiplier lambda_ij as a polynomial lambda_hat_ij
divided by a common denominator q_i (identically one for polynomial and
parametric kinds).  Parametric kinds carry extra parameters w_i; every
critical pair of the player's optimization corresponds to some parameter
value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .model import GnepProblem
from .momentsos import QmodTemplate, RelaxationError
from .polynomials import (PolyMatrix, Polynomial, VariableSpace, det_and_adjugate,
                          monomial_basis)
from . import sdp

POLYNOMIAL = "polynomial"
RATIONAL = "rational"
PARAMETRIC = "parametric"

COEFF_IDENTITY_TOL = 1e-9


class ExpressionError(ValueError):
    pass


@dataclass(frozen=True)
class LagrangeExpression:
    """Closed-form multipliers for one player.

    lambda_hat[j] and q live in the player's expression space: the shared
    x-blocks plus, for parametric kinds, this player's w-block.
    """

    kind: str
    player: int
    lambda_hat: tuple
    q: Polynomial
    num_params: int = 0
    q_nonneg_assumed: bool = True

    def __post_init__(self):
        if self.kind not in (POLYNOMIAL, RATIONAL, PARAMETRIC):
            raise ExpressionError(f"unknown expression kind {self.kind!r}")
        if self.kind != PARAMETRIC and self.num_params:
            raise ExpressionError("only parametric expressions carry parameters")
        if self.kind == RATIONAL and self.q.is_zero():
            raise ExpressionError("rational expression with zero denominator")

    @property
    def num_multipliers(self) -> int:
        return len(self.lambda_hat)


def expression_space(problem: GnepProblem, i: int, num_params: int) -> VariableSpace:
    blocks = list(problem.space.blocks)
    if num_params > 0:
        blocks.append((f"w[{i + 1}]", num_params))
    return VariableSpace(blocks)


@dataclass(frozen=True)
class CriticalMatrix:
    """G_i stacks the player-block constraint gradients over diag(g); the
    right-hand side fhat is the player-block objective gradient over zeros."""

    matrix: PolyMatrix             # (n_i + m_i) x m_i
    fhat: tuple                    # n_i + m_i polynomials


def build_critical_matrix(problem: GnepProblem, i: int) -> CriticalMatrix:
    player = problem.players[i]
    space = problem.space
    block = problem.block_name(i)
    m = player.num_constraints
    if m == 0:
        raise ExpressionError(f"player {i + 1} has no constraints")
    zero = Polynomial.zero(space)
    rows: list[list[Polynomial]] = []
    grads = [g.gradient(block) for g in player.constraints]
    for c in range(player.dim):
        rows.append([grads[j][c] for j in range(m)])
    for k in range(m):
        rows.append([player.constraints[j] if j == k else zero for j in range(m)])
    fhat = list(player.objective.gradient(block)) + [zero] * m
    return CriticalMatrix(PolyMatrix(rows), tuple(fhat))


def rational_expression_adjugate(problem: GnepProblem, i: int) -> LagrangeExpression:
    """Adjugate route: q = det(G'G), lambda_hat = adj(G'G) G' fhat.

    The denominator is a sum of squares of minors, hence nonnegative
    everywhere.  Capped at 6 constraints; the determinant degree explodes
    beyond that and templates or the SOS search should be used instead.
    """
    player = problem.players[i]
    m = player.num_constraints
    if m > 6:
        raise ExpressionError(
            f"adjugate construction capped at 6 constraints, player has {m}")
    for j, g in enumerate(player.constraints):
        if g.is_zero():
            raise ExpressionError(
                f"player {i + 1}: constraint {j + 1} is identically zero")
    cm = build_critical_matrix(problem, i)
    G = cm.matrix
    H = G.transpose().matmul(G)
    q, adjH = det_and_adjugate(H)
    Lhat = adjH.matmul(G.transpose())
    lam = Lhat.matvec(list(cm.fhat))
    _check_adjugate_identity(Lhat, G, q)
    return LagrangeExpression(RATIONAL, i, tuple(lam), q)


def _check_adjugate_identity(Lhat: PolyMatrix, G: PolyMatrix, q: Polynomial):
    m = G.cols
    prod = Lhat.matmul(G)
    scale = max(q.max_abs_coeff(), prod.max_abs_coeff(), 1.0)
    worst = 0.0
    for r in range(m):
        for c in range(m):
            diff = prod[r, c] - q if r == c else prod[r, c]
            worst = max(worst, diff.max_abs_coeff())
    if worst > COEFF_IDENTITY_TOL * scale:
        raise ExpressionError(
            f"adjugate identity residual {worst / scale:.3e} exceeds tolerance")


# -- SOS search for rational expressions ------------------------------------------

@dataclass
class SosCertificate:
    gamma: float
    q: Polynomial
    lhat: PolyMatrix
    multipliers: list
    sos_terms: list
    reconstruction_residual: float
    min_gram_eigenvalue: float


@dataclass
class SosSearchResult:
    status: str                      # "found" | "infeasible" | "solver-failure"
    expression: LagrangeExpression | None
    certificate: SosCertificate | None
    degree: int
    sdp_status: str


def find_rational_expression_sos(problem: GnepProblem, i: int, d: int, v,
                                 opts: sdp.SdpOptions | None = None) -> SosSearchResult:
    """Search degree-2d certificates: maximize gamma subject to
    Lhat G = q I, q(v) = 1, q - gamma in Ideal[g_E]_{2d} + Qmod[g_I]_{2d}.

    gamma > 0 certifies that the critical matrix has full column rank on the
    joint feasible set, so q > 0 there and the rational expression is exact.
    """
    player = problem.players[i]
    space = problem.space
    cm = build_critical_matrix(problem, i)
    G = cm.matrix
    deg_G = G.degree()
    if 2 * d < deg_G:
        raise ExpressionError(f"degree {d} too small: entries of the critical "
                              f"matrix have degree {deg_G}")
    m = player.num_constraints
    nrows = player.dim + m
    # Entries of Lhat in column k may have degree 2d minus the degree of the
    # k-th row of G, so that every product in Lhat*G stays within degree 2d.
    row_degs = [max(G[k, c].degree() for c in range(m)) for k in range(nrows)]
    lhat_bases = [monomial_basis(space, None, max(0, 2 * d - row_degs[k]))
                  for k in range(nrows)]
    q_basis = monomial_basis(space, None, 2 * d)
    two_d_index = {e: r for r, e in enumerate(q_basis)}
    eq_gens, ineq_gens = [], []
    for pl in problem.players:
        for j, g in enumerate(pl.constraints):
            (eq_gens if j in pl.eq_set else ineq_gens).append(g)
    tpl = QmodTemplate(space, 2 * d, tuple(eq_gens), tuple(ineq_gens))

    col_sizes = [len(b) for b in lhat_bases]
    col_offs = np.concatenate([[0], np.cumsum(col_sizes)]).astype(int)
    per_row = int(col_offs[-1])
    n_lhat = m * per_row
    off_q = n_lhat
    off_gamma = off_q + len(q_basis)
    off_tpl = off_gamma + 1
    nvars = off_tpl + tpl.num_vars

    def lvar(r, k, b):
        return r * per_row + col_offs[k] + b

    builder = sdp.SdpBuilder(nvars)
    builder.add_objective(off_gamma, -1.0)  # maximize gamma

    rows = []
    # (Lhat G)_{rc} - q [r==c] = 0, coefficientwise up to degree 2d
    for r in range(m):
        for c in range(m):
            acc: dict[tuple, list] = {}
            for k in range(nrows):
                gpoly = G[k, c]
                if gpoly.is_zero():
                    continue
                for b, beta in enumerate(lhat_bases[k]):
                    var = lvar(r, k, b)
                    for alpha, cf in gpoly.terms.items():
                        e = tuple(a + bb for a, bb in zip(alpha, beta))
                        acc.setdefault(e, []).append((var, cf))
            if r == c:
                for b, beta in enumerate(q_basis):
                    acc.setdefault(beta, []).append((off_q + b, -1.0))
            for e, entries in acc.items():
                rows.append((0.0, entries))
    # q(v) = 1
    vpt = np.asarray(v, dtype=float).ravel()
    if vpt.shape[0] != space.total_dim:
        raise ExpressionError("interior point dimension mismatch")
    ent = []
    for b, beta in enumerate(q_basis):
        val = 1.0
        for idx, e in enumerate(beta):
            if e:
                val *= vpt[idx] ** e
        ent.append((off_q + b, val))
    rows.append((-1.0, ent))
    # q - gamma = ideal + qmod combination
    comb: dict[int, list] = {}
    for ridx, var, cf in tpl.rows():
        comb.setdefault(ridx, []).append((off_tpl + var, cf))
    for ridx, e in enumerate(tpl.basis):
        entries = [(off_q + two_d_index[e], 1.0)]
        if sum(e) == 0:
            entries.append((off_gamma, -1.0))
        entries.extend((var, -cf) for var, cf in comb.get(ridx, []))
        rows.append((0.0, entries))
    builder.add_linear_block(sdp.ZERO, rows)
    for gen, gbasis, off, nb in tpl.gram_blocks():
        trip = []
        var = off_tpl + off
        for a in range(nb):
            for b in range(a, nb):
                trip.append((a, b, var, 1.0))
                var += 1
        builder.add_psd_block(nb, trip)

    sol = sdp.solve_sdp(builder.build(), opts)
    if sol.status == sdp.PRIMAL_INFEASIBLE:
        return SosSearchResult("infeasible", None, None, d, sol.status)
    if sol.status != sdp.OPTIMAL:
        return SosSearchResult("solver-failure", None, None, d, sol.status)
    x = sol.x
    gamma = x[off_gamma]
    q = Polynomial(space, {beta: x[off_q + b] for b, beta in enumerate(q_basis)})
    lhat_entries = []
    for r in range(m):
        row = []
        for k in range(nrows):
            terms = {beta: x[lvar(r, k, b)] for b, beta in enumerate(lhat_bases[k])}
            row.append(Polynomial(space, terms))
        lhat_entries.append(row)
    Lhat = PolyMatrix(lhat_entries)
    lam = Lhat.matvec(list(cm.fhat))
    # reconstruct q - gamma from the membership variables and validate
    recon = Polynomial.constant(space, 0.0)
    multipliers = []
    for h, hb, off, nb in tpl.free_blocks():
        terms = {beta: x[off_tpl + off + b] for b, beta in enumerate(hb)}
        mult = Polynomial(space, terms)
        multipliers.append((h, mult))
        recon = recon + h * mult
    sos_terms = []
    min_eig = math.inf
    for gen, gbasis, off, nb in tpl.gram_blocks():
        Gm = np.zeros((nb, nb))
        var = off_tpl + off
        for a in range(nb):
            for b in range(a, nb):
                Gm[a, b] = Gm[b, a] = x[var]
                var += 1
        sos_terms.append((gen, Gm, gbasis))
        min_eig = min(min_eig, float(sla.eigvalsh(Gm, check_finite=False).min()))
        sigma = Polynomial.zero(space)
        for a in range(nb):
            for b in range(nb):
                if Gm[a, b]:
                    e = tuple(p + qq for p, qq in zip(gbasis[a], gbasis[b]))
                    sigma = sigma + Polynomial(space, {e: Gm[a, b]})
        recon = recon + gen * sigma
    target = q - gamma
    residual = (target - recon).max_abs_coeff()
    cert = SosCertificate(gamma, q, Lhat, multipliers, sos_terms, residual, min_eig)
    if residual > 1e-6 * max(1.0, target.max_abs_coeff()) or min_eig < -1e-8:
        return SosSearchResult("solver-failure", None, cert, d, sol.status)
    expr = LagrangeExpression(RATIONAL, i, tuple(lam), q)
    return SosSearchResult("found", expr, cert, d, sol.status)


# -- parametric templates -----------------------------------------------------------

NONNEG_TEMPLATE = "nonneg"
BOX_TEMPLATE = "box"
SIMPLEX_TEMPLATE = "simplex"
LINEAR_TEMPLATE = "linear"
GENERAL_TEMPLATE = "general"


class TemplateMismatch(ExpressionError):
    pass


def _template_space(problem, i, s):
    return expression_space(problem, i, s)


def _omega(space, i, k):
    return Polynomial.variable(space, f"w[{i + 1}]", k)


def _require_ineq_prefix(player, count, what):
    for j in range(count):
        if j not in player.ineq_set:
            raise TemplateMismatch(
                f"{what} template needs inequality constraints in positions "
                f"1..{count}; constraint {j + 1} is an equality")


def parametric_template(problem: GnepProblem, i: int, kind: str,
                        bounds=None, num_linear: int | None = None,
                        d_matrix=None, subset=None) -> LagrangeExpression:
    """Structured parametric expressions for common constraint prefixes.

    kinds:
      nonneg  - x_i >= 0 coordinatewise first, then extra constraints
      box     - a_ij <= x_ij <= b_ij interleaved (lower, upper) first;
                bounds is a list of (a_ij, b_ij) pairs
      simplex - 1 - sum(x_i) >= 0 then x_i >= 0 coordinatewise, then extras
      linear  - r rows a_j' x_i - b_j(x_-i) >= 0 first (num_linear = r)
      general - caller supplies d_matrix with D * Ghat = I over the subset
                of constraints (default: the first r)
    """
    player = problem.players[i]
    n_i = player.dim
    m = player.num_constraints
    block = problem.block_name(i)

    if kind == NONNEG_TEMPLATE:
        s = m - n_i
        if s < 0:
            raise TemplateMismatch("fewer constraints than coordinates")
        _require_ineq_prefix(player, n_i, "nonneg")
        space = _template_space(problem, i, s)
        _check_prefix_nonneg(problem, i, 0)
        F = _reduced_gradient(problem, i, space, n_i, s)
        lam = list(F)
        lam += [_omega(space, i, k) for k in range(s)]
        return LagrangeExpression(PARAMETRIC, i, tuple(lam),
                                  Polynomial.constant(space, 1.0), s)

    if kind == BOX_TEMPLATE:
        s = m - 2 * n_i
        if s < 0 or bounds is None or len(bounds) != n_i:
            raise TemplateMismatch("box template needs per-coordinate bounds "
                                   "and at least 2*n_i constraints")
        _require_ineq_prefix(player, 2 * n_i, "box")
        for a, b in bounds:
            if not b > a:
                raise TemplateMismatch(f"box bounds need b > a, got [{a}, {b}]")
        space = _template_space(problem, i, s)
        _check_prefix_box(problem, i, bounds)
        F = _reduced_gradient(problem, i, space, 2 * n_i, s)
        lam = []
        for c in range(n_i):
            a, b = bounds[c]
            xc = Polynomial.variable(space, block, c)
            lam.append((b - xc) * F[c] * (1.0 / (b - a)))
            lam.append((a - xc) * F[c] * (1.0 / (b - a)))
        lam += [_omega(space, i, k) for k in range(s)]
        return LagrangeExpression(PARAMETRIC, i, tuple(lam),
                                  Polynomial.constant(space, 1.0), s)

    if kind == SIMPLEX_TEMPLATE:
        s = m - n_i - 1
        if s < 0:
            raise TemplateMismatch("simplex template needs n_i + 1 constraints")
        _require_ineq_prefix(player, n_i + 1, "simplex")
        space = _template_space(problem, i, s)
        _check_prefix_simplex(problem, i)
        F = _reduced_gradient(problem, i, space, n_i + 1, s)
        xs = [Polynomial.variable(space, block, c) for c in range(n_i)]
        lam1 = Polynomial.zero(space)
        for c in range(n_i):
            lam1 = lam1 - F[c] * xs[c]
        lam = [lam1]
        lam += [F[c] + lam1 for c in range(n_i)]
        lam += [_omega(space, i, k) for k in range(s)]
        return LagrangeExpression(PARAMETRIC, i, tuple(lam),
                                  Polynomial.constant(space, 1.0), s)

    if kind == LINEAR_TEMPLATE:
        r = num_linear
        if r is None or not 1 <= r <= m:
            raise TemplateMismatch("linear template needs num_linear in 1..m")
        _require_ineq_prefix(player, r, "linear")
        A = _linear_prefix_matrix(problem, i, r)
        if np.linalg.matrix_rank(A) < r:
            raise TemplateMismatch("linear constraint matrix is row-rank deficient")
        s = m - r
        space = _template_space(problem, i, s)
        F = _reduced_gradient(problem, i, space, r, s)
        P = np.linalg.solve(A @ A.T, A)    # (AA')^{-1} A
        lam = []
        for row in range(r):
            acc = Polynomial.zero(space)
            for c in range(n_i):
                if P[row, c]:
                    acc = acc + P[row, c] * F[c]
            lam.append(acc)
        lam += [_omega(space, i, k) for k in range(s)]
        return LagrangeExpression(PARAMETRIC, i, tuple(lam),
                                  Polynomial.constant(space, 1.0), s)

    if kind == GENERAL_TEMPLATE:
        if d_matrix is None:
            raise TemplateMismatch("general template needs the certificate matrix D")
        r = d_matrix.rows
        T = list(subset) if subset is not None else list(range(r))
        if len(T) != r or d_matrix.cols != n_i + r:
            raise TemplateMismatch("D must be r x (n_i + r) over an r-subset")
        s = m - r
        space = _template_space(problem, i, s)
        _verify_general_certificate(problem, i, d_matrix, T)
        others = [j for j in range(m) if j not in T]
        F = _reduced_gradient_subset(problem, i, space, others[:], s)
        D = PolyMatrix([[p.embed(space) for p in row] for row in d_matrix.entries])
        fhat_red = list(F) + [Polynomial.zero(space)] * r
        lam_T = D.matvec(fhat_red)
        lam = [Polynomial.zero(space)] * m
        for pos, j in enumerate(T):
            lam[j] = lam_T[pos]
        for k, j in enumerate(others):
            lam[j] = _omega(space, i, k)
        return LagrangeExpression(PARAMETRIC, i, tuple(lam),
                                  Polynomial.constant(space, 1.0), s)

    raise TemplateMismatch(f"unknown template kind {kind!r}")


def trivial_parametric_expression(problem: GnepProblem, i: int) -> LagrangeExpression:
    """Every multiplier becomes its own parameter (s_i = m_i)."""
    m = problem.players[i].num_constraints
    space = _template_space(problem, i, m)
    lam = [_omega(space, i, j) for j in range(m)]
    return LagrangeExpression(PARAMETRIC, i, tuple(lam),
                              Polynomial.constant(space, 1.0), m)


def _reduced_gradient(problem, i, space, skip, s):
    """grad f_i - sum_k w_ik grad g_{i,skip+k} in the expression space."""
    return _reduced_gradient_subset(
        problem, i, space,
        list(range(skip, problem.players[i].num_constraints)), s)


def _reduced_gradient_subset(problem, i, space, extra_indices, s):
    player = problem.players[i]
    block = problem.block_name(i)
    F = [p.embed(space) for p in player.objective.gradient(block)]
    for k, j in enumerate(extra_indices):
        grad = [p.embed(space) for p in player.constraints[j].gradient(block)]
        w = _omega(space, i, k)
        for c in range(player.dim):
            F[c] = F[c] - w * grad[c]
    return F


def _check_prefix_nonneg(problem, i, offset):
    player = problem.players[i]
    block = problem.block_name(i)
    space = problem.space
    for c in range(player.dim):
        want = Polynomial.variable(space, block, c)
        got = player.constraints[offset + c]
        if (got - want).max_abs_coeff() > COEFF_IDENTITY_TOL:
            raise TemplateMismatch(
                f"constraint {offset + c + 1} must be x_{c + 1} >= 0 for this template")


def _check_prefix_box(problem, i, bounds):
    player = problem.players[i]
    block = problem.block_name(i)
    space = problem.space
    for c in range(player.dim):
        a, b = bounds[c]
        xc = Polynomial.variable(space, block, c)
        lower = player.constraints[2 * c]
        upper = player.constraints[2 * c + 1]
        if (lower - (xc - a)).max_abs_coeff() > COEFF_IDENTITY_TOL:
            raise TemplateMismatch(f"constraint {2 * c + 1} must be x_{c + 1} - a")
        if (upper - (b - xc)).max_abs_coeff() > COEFF_IDENTITY_TOL:
            raise TemplateMismatch(f"constraint {2 * c + 2} must be b - x_{c + 1}")


def _check_prefix_simplex(problem, i):
    player = problem.players[i]
    block = problem.block_name(i)
    space = problem.space
    want = Polynomial.constant(space, 1.0)
    for c in range(player.dim):
        want = want - Polynomial.variable(space, block, c)
    if (player.constraints[0] - want).max_abs_coeff() > COEFF_IDENTITY_TOL:
        raise TemplateMismatch("constraint 1 must be 1 - sum(x_i)")
    _check_prefix_nonneg(problem, i, 1)


def _linear_prefix_matrix(problem, i, r) -> np.ndarray:
    player = problem.players[i]
    block = problem.block_name(i)
    space = problem.space
    A = np.zeros((r, player.dim))
    for j in range(r):
        grads = player.constraints[j].gradient(block)
        for c, gp in enumerate(grads):
            if gp.degree() > 0:
                raise TemplateMismatch(
                    f"constraint {j + 1} is not affine in the player's block")
            A[j, c] = gp.constant_term()
    return A


def _verify_general_certificate(problem, i, d_matrix: PolyMatrix, T):
    player = problem.players[i]
    block = problem.block_name(i)
    space = d_matrix.space
    r = len(T)
    zero = Polynomial.zero(space)
    rows = []
    for j in T:
        g = player.constraints[j].embed(space)
        rows.append([p.embed(space) for p in
                     player.constraints[j].gradient(block)])
    ghat_rows = []
    for c in range(player.dim):
        ghat_rows.append([rows[pos][c] for pos in range(r)])
    for pos, j in enumerate(T):
        g = player.constraints[j].embed(space)
        ghat_rows.append([g if pp == pos else zero for pp in range(r)])
    Ghat = PolyMatrix(ghat_rows)
    prod = d_matrix.matmul(Ghat)
    scale = max(prod.max_abs_coeff(), 1.0)
    worst = 0.0
    for a in range(r):
        for b in range(r):
            diff = prod[a, b] - (1.0 if a == b else 0.0)
            worst = max(worst, diff.max_abs_coeff())
    if worst > COEFF_IDENTITY_TOL * scale:
        raise ExpressionError(
            f"certificate matrix fails D*Ghat = I (residual {worst / scale:.3e})")


# -- numeric verification ------------------------------------------------------------

@dataclass
class VerificationReport:
    max_residual: float
    per_sample: list


def verify_expression(expr: LagrangeExpression, problem: GnepProblem, i: int,
                      samples) -> VerificationReport:
    """Check q(x) * lambda = lambda_hat(x) on critical pairs (x, lambda_i).

    For parametric expressions the parameters are fitted by least squares
    (the templates are affine in w) and the residual of the best fit is
    reported.
    """
    player = problem.players[i]
    space = expr.q.space
    out = []
    worst = 0.0
    for x, lam in samples:
        x = np.asarray(x, dtype=float).ravel()
        lam = np.asarray(lam, dtype=float).ravel()
        if lam.shape[0] != player.num_constraints:
            raise ExpressionError("sample multiplier length mismatch")
        if expr.num_params == 0:
            pt = x
            vals = np.array([p.eval(pt) for p in expr.lambda_hat])
            resid = float(np.abs(expr.q.eval(pt) * lam - vals).max())
        else:
            base = np.concatenate([x, np.zeros(expr.num_params)])
            c0 = np.array([p.eval(base) for p in expr.lambda_hat])
            M = np.zeros((player.num_constraints, expr.num_params))
            for k in range(expr.num_params):
                pt = base.copy()
                pt[len(x) + k] = 1.0
                M[:, k] = np.array([p.eval(pt) for p in expr.lambda_hat]) - c0
            w, *_ = np.linalg.lstsq(M, lam - c0, rcond=None)
            resid = float(np.abs(c0 + M @ w - lam).max())
        out.append(resid)
        worst = max(worst, resid)
    return VerificationReport(worst, out)


# -- expression files -----------------------------------------------------------------

def expression_to_text(expr: LagrangeExpression) -> str:
    from .fileio import format_keyvalues, format_polynomial

    items = {
        "kind": expr.kind,
        "player": expr.player + 1,
        "num_params": expr.num_params,
        "q": format_polynomial(expr.q),
    }
    for j, lam in enumerate(expr.lambda_hat, start=1):
        items[f"lambda[{j}]"] = format_polynomial(lam)
    return format_keyvalues(items)


def expression_from_text(text: str, problem: GnepProblem, i: int,
                         source: str = "<expression>") -> LagrangeExpression:
    from .fileio import collect_indexed, parse_keyvalues, parse_polynomial, ParseError

    items = parse_keyvalues(text, source)
    kind = str(items.get("kind", ""))
    if kind not in (POLYNOMIAL, RATIONAL, PARAMETRIC):
        raise ParseError(f"{source}: kind must be polynomial, rational or parametric")
    num_params = int(items.get("num_params", 0))
    if items.get("player", i + 1) != i + 1:
        raise ParseError(f"{source}: expression is for player {items['player']}, "
                         f"expected {i + 1}")
    space = expression_space(problem, i, num_params)
    lam_items = [items[k] for k in items if k.startswith("lambda[")]
    lams = []
    j = 1
    while f"lambda[{j}]" in items:
        lams.append(parse_polynomial(str(items[f"lambda[{j}]"]), space))
        j += 1
    if len(lams) != len(lam_items):
        raise ParseError(f"{source}: lambda indices are not dense")
    if len(lams) != problem.players[i].num_constraints:
        raise ParseError(
            f"{source}: {len(lams)} multipliers for "
            f"{problem.players[i].num_constraints} constraints")
    q = parse_polynomial(str(items.get("q", "1")), space)
    return LagrangeExpression(kind, i, tuple(lams), q, num_params)
