#!/usr/bin/env python3
"""Regenerate the bundled example corpus under src/gnepoly/corpus/data/.

Each entry gets a problem file, expression files where multipliers are given
in closed form, and a run manifest.  Expressions are computed symbolically
with the package's polynomial tools so the emitted text is exact; the
multiplier-matrix identities are asserted before anything is written.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gnepoly.fileio import format_keyvalues
from gnepoly.lme import (LagrangeExpression, PARAMETRIC, POLYNOMIAL, RATIONAL,
                         build_critical_matrix, expression_space, expression_to_text)
from gnepoly.model import (EQ, INEQ, GnepProblem, PlayerProblem, make_space,
                           problem_to_text, validate)
from gnepoly.polynomials import PolyMatrix, Polynomial, poly_dot

DATA = Path(__file__).resolve().parents[1] / "src" / "gnepoly" / "corpus" / "data"


def write(name, text):
    (DATA / name).write_text(text)
    print(f"wrote {name}")


def check_lhat_identity(problem, i, lhat, q):
    """Assert Lhat * G = q * I symbolically before emitting files."""
    cm = build_critical_matrix(problem, i)
    prod = lhat.matmul(cm.matrix)
    m = cm.matrix.cols
    for r in range(m):
        for c in range(m):
            diff = prod[r, c] - q if r == c else prod[r, c]
            assert diff.max_abs_coeff() < 1e-9, (i, r, c)


def lambdas_from_lhat(problem, i, lhat):
    cm = build_critical_matrix(problem, i)
    return tuple(lhat.matvec(list(cm.fhat)))


def manifest_text(problem_file, sources, extra=None):
    items = {"problem": problem_file}
    for j, src in enumerate(sources, start=1):
        for key, val in src.items():
            items[f"players[{j}].{key}"] = val
    items.update(extra or {})
    return format_keyvalues(items)


# ---------------------------------------------------------------- ex1.4 / ex6.1ii

def build_ex61(variant):
    sp = make_space([3, 3])
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(3)]
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(3)]
    if variant == "i":
        f1 = sum(((a - b) ** 2 for a, b in zip(x1, x2)), Polynomial.zero(sp))
    else:
        lin = x1[0] + x1[1] - 2 * x1[2]
        f1 = (x2[0] + x2[1] - 2 * x2[2]) * lin * lin + lin
    f2 = sum((b ** 4 for b in x2), Polynomial.zero(sp)) \
        - sum(x2, Polynomial.zero(sp)) * (x1[0] * x1[1] * x1[2])
    p1 = PlayerProblem.from_kinds(0, 3, f1,
                                  [poly_dot(x2, x1) - 1, x1[0], x1[1], x1[2]],
                                  [EQ, INEQ, INEQ, INEQ])
    p2 = PlayerProblem.from_kinds(1, 3, f2,
                                  [poly_dot(x1, x1) - poly_dot(x2, x2)], [INEQ])
    prob = GnepProblem((p1, p2), sp)
    assert not validate(prob)
    grad_f1 = f1.gradient("x[1]")
    lam11 = poly_dot(x1, grad_f1)
    lams1 = (lam11,) + tuple(grad_f1[j] - lam11 * x2[j] for j in range(3))
    e1 = LagrangeExpression(POLYNOMIAL, 0, lams1, Polynomial.constant(sp, 1.0))
    grad_f2 = f2.gradient("x[2]")
    e2 = LagrangeExpression(RATIONAL, 1, (poly_dot(x2, grad_f2) * (-0.5),),
                            poly_dot(x1, x1))
    return prob, [e1, e2]


def emit_ex61():
    for variant, name in (("i", "ex1.4"), ("ii", "ex6.1ii")):
        prob, exprs = build_ex61(variant)
        write(f"{name}.problem", problem_to_text(prob))
        for i, e in enumerate(exprs, start=1):
            write(f"{name}.p{i}.expr", expression_to_text(e))
        write(f"{name}.manifest", manifest_text(
            f"{name}.problem",
            [{"source": "file", "expression": f"{name}.p{i}.expr"}
             for i in (1, 2)]))


# ------------------------------------------------------------------ ex6.2 (A.8)

def emit_ex62():
    sp = make_space([1, 1, 1])
    x1 = Polynomial.variable(sp, "x[1]", 0)
    x2 = Polynomial.variable(sp, "x[2]", 0)
    x3 = Polynomial.variable(sp, "x[3]", 0)
    one = Polynomial.constant(sp, 1.0)
    players = []
    # first two players share the chain constraints x3 <= x1 + x2 <= 1
    for i, (xi, f) in enumerate([(x1, -x1), (x2, (x2 - 0.5) ** 2)]):
        cons = [x1 + x2 - x3, 1 - x1 - x2, xi]
        players.append(PlayerProblem.from_kinds(i, 1, f, cons, [INEQ] * 3))
    f3 = (x3 - 1.5 * x1) ** 2
    players.append(PlayerProblem.from_kinds(2, 1, f3, [x3, 2 - x3], [INEQ] * 2))
    prob = GnepProblem(tuple(players), sp)
    assert not validate(prob)

    exprs = []
    for i, xi in enumerate([x1, x2]):
        lhat = PolyMatrix([
            [xi * (1 - x1 - x2), xi, xi, x1 + x2 - 1],
            [xi * (x3 - x1 - x2), xi, xi, x1 + x2 - x3],
            [Polynomial.zero(sp), Polynomial.zero(sp), Polynomial.zero(sp), 1 - x3],
        ])
        q = xi * (1 - x3)
        check_lhat_identity(prob, i, lhat, q)
        exprs.append(LagrangeExpression(RATIONAL, i,
                                        lambdas_from_lhat(prob, i, lhat), q))
    lhat3 = PolyMatrix([
        [0.5 * (2 - x3), 0.5 * one, 0.5 * one],
        [-0.5 * x3, 0.5 * one, 0.5 * one],
    ])
    check_lhat_identity(prob, 2, lhat3, one)
    exprs.append(LagrangeExpression(POLYNOMIAL, 2,
                                    lambdas_from_lhat(prob, 2, lhat3), one))

    name = "ex6.2-A.8"
    write(f"{name}.problem", problem_to_text(prob))
    for i, e in enumerate(exprs, start=1):
        write(f"{name}.p{i}.expr", expression_to_text(e))
    write(f"{name}.manifest", manifest_text(
        f"{name}.problem",
        [{"source": "file", "expression": f"{name}.p{i}.expr"} for i in (1, 2, 3)]))


# ----------------------------------------------------------------------- ex6.3

def emit_ex63():
    sp = make_space([2, 1])
    x11 = Polynomial.variable(sp, "x[1]", 0)
    x12 = Polynomial.variable(sp, "x[1]", 1)
    x2 = Polynomial.variable(sp, "x[2]", 0)
    f1 = (x11 - 1) ** 2 + (x12 - 1) ** 2 + x2 * (x11 - x12)
    f2 = x2 ** 3 - x11 * x12 * x2 - x2
    p1 = PlayerProblem.from_kinds(0, 2, f1, [2 - x11 * x11 - x12 * x12 - x2], [INEQ])
    p2 = PlayerProblem.from_kinds(1, 1, f2,
                                  [3 * x2 - x11 * x11 - x12 * x12, 1 - x2],
                                  [INEQ, INEQ])
    prob = GnepProblem((p1, p2), sp)
    assert not validate(prob)

    grad_f1 = f1.gradient("x[1]")
    lhat1 = PolyMatrix([[-0.5 * x11, -0.5 * x12, Polynomial.constant(sp, 1.0)]])
    q1 = 2 - x2
    check_lhat_identity(prob, 0, lhat1, q1)
    e1 = LagrangeExpression(RATIONAL, 0, lambdas_from_lhat(prob, 0, lhat1), q1)
    third = 1.0 / 3.0
    lhat2 = PolyMatrix([
        [third - third * x2, Polynomial.constant(sp, third), Polynomial.constant(sp, third)],
        [third * (x11 * x11 + x12 * x12) - x2, Polynomial.constant(sp, 1.0),
         Polynomial.constant(sp, 1.0)],
    ])
    q2 = 1 - third * (x11 * x11 + x12 * x12)
    check_lhat_identity(prob, 1, lhat2, q2)
    e2 = LagrangeExpression(RATIONAL, 1, lambdas_from_lhat(prob, 1, lhat2), q2)

    name = "ex6.3"
    write(f"{name}.problem", problem_to_text(prob))
    for i, e in enumerate([e1, e2], start=1):
        write(f"{name}.p{i}.expr", expression_to_text(e))
    write(f"{name}.manifest", manifest_text(
        f"{name}.problem",
        [{"source": "file", "expression": f"{name}.p{i}.expr"} for i in (1, 2)]))


# ----------------------------------------------------------------------- ex6.4

def emit_ex64():
    sp = make_space([3, 3])
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(3)]
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(3)]
    ball = 1 - poly_dot(x1, x1) - poly_dot(x2, x2)
    f1 = 10 * poly_dot(x1, x2) - sum(x1, Polynomial.zero(sp))
    f2 = sum(((a * b) ** 2 for a, b in zip(x1, x2)), Polynomial.zero(sp)) \
        + (3 * x1[0] * x1[1] * x1[2] - 1) * sum(x2, Polynomial.zero(sp))
    p1 = PlayerProblem.from_kinds(0, 3, f1, [ball], [INEQ])
    p2 = PlayerProblem.from_kinds(1, 3, f2, [ball], [INEQ])
    prob = GnepProblem((p1, p2), sp)
    assert not validate(prob)
    e1 = LagrangeExpression(RATIONAL, 0,
                            (poly_dot(x1, f1.gradient("x[1]")) * (-0.5),),
                            1 - poly_dot(x2, x2))
    e2 = LagrangeExpression(RATIONAL, 1,
                            (poly_dot(x2, f2.gradient("x[2]")) * (-0.5),),
                            1 - poly_dot(x1, x1))
    name = "ex6.4"
    write(f"{name}.problem", problem_to_text(prob))
    for i, e in enumerate([e1, e2], start=1):
        write(f"{name}.p{i}.expr", expression_to_text(e))
    write(f"{name}.manifest", manifest_text(
        f"{name}.problem",
        [{"source": "file", "expression": f"{name}.p{i}.expr"} for i in (1, 2)]))


# ----------------------------------------------------------------------- ex6.5

def emit_ex65():
    sp = make_space([2, 2])
    x11 = Polynomial.variable(sp, "x[1]", 0)
    x12 = Polynomial.variable(sp, "x[1]", 1)
    x21 = Polynomial.variable(sp, "x[2]", 0)
    x22 = Polynomial.variable(sp, "x[2]", 1)
    f1 = x21 * x11 ** 3 + x12 ** 3 - (x11 + x12) * (x21 + x22)
    f2 = (x11 + x12) * x21 ** 3 - 3 * x21 + x22 ** 2 + x11 * x12 * x22
    p1 = PlayerProblem.from_kinds(0, 2, f1, [
        x11 - 2 * x12 + x22,
        1 - x21 * (x11 * x11 + x12 * x12),
        x11, x12,
    ], [INEQ] * 4)
    p2 = PlayerProblem.from_kinds(1, 2, f2, [
        x12 + x22 - x21 * x21 + 1,
        2 - x22,
        1 + x22,
        x21,
    ], [INEQ] * 4)
    prob = GnepProblem((p1, p2), sp)
    assert not validate(prob)

    # one free parameter per player, tied to the first constraint
    sp1 = expression_space(prob, 0, 1)
    w1 = Polynomial.variable(sp1, "w[1]", 0)
    e11, e12 = (p.embed(sp1) for p in (x11, x12))
    e21 = x21.embed(sp1)
    d1 = [p.embed(sp1) for p in f1.gradient("x[1]")]
    lam12 = -0.5 * (e11 * (d1[0] - w1) + e12 * (d1[1] + 2 * w1))
    lam13 = d1[0] - w1 + 2 * e21 * e11 * lam12
    lam14 = d1[1] + 2 * w1 + 2 * e21 * e12 * lam12
    e1 = LagrangeExpression(PARAMETRIC, 0, (w1, lam12, lam13, lam14),
                            Polynomial.constant(sp1, 1.0), 1)

    sp2 = expression_space(prob, 1, 1)
    w2 = Polynomial.variable(sp2, "w[2]", 0)
    f21 = x21.embed(sp2)
    f22 = x22.embed(sp2)
    d2 = [p.embed(sp2) for p in f2.gradient("x[2]")]
    third = 1.0 / 3.0
    lam22 = -third * ((d2[0] + 2 * f21 * w2) * f21 + (d2[1] - w2) * (f22 + 1))
    lam23 = d2[1] + lam22 - w2
    lam24 = d2[0] + 2 * f21 * w2
    e2 = LagrangeExpression(PARAMETRIC, 1, (w2, lam22, lam23, lam24),
                            Polynomial.constant(sp2, 1.0), 1)

    name = "ex6.5"
    write(f"{name}.problem", problem_to_text(prob))
    for i, e in enumerate([e1, e2], start=1):
        write(f"{name}.p{i}.expr", expression_to_text(e))
    write(f"{name}.manifest", manifest_text(
        f"{name}.problem",
        [{"source": "file", "expression": f"{name}.p{i}.expr"} for i in (1, 2)]))


# ----------------------------------------------------------------------- ex6.6

def emit_ex66():
    sp = make_space([2, 2])
    x11 = Polynomial.variable(sp, "x[1]", 0)
    x12 = Polynomial.variable(sp, "x[1]", 1)
    x21 = Polynomial.variable(sp, "x[2]", 0)
    x22 = Polynomial.variable(sp, "x[2]", 1)
    f1 = x11 ** 2 + 2 * x12 ** 2 + 3 * (x11 * x21 ** 2 + x12 * x22 ** 2)
    f2 = (x11 ** 2 + x12 ** 2) * (x21 ** 2 + x22 ** 2) \
        + 3 * (x11 * x21 + x12 * x22) + x21 - x22
    p1 = PlayerProblem.from_kinds(0, 2, f1, [
        1 - x11 - 2 * x12 + x21,
        3 - x12 * x12 - x21 * x21,
        x11,
    ], [INEQ] * 3)
    p2 = PlayerProblem.from_kinds(1, 2, f2, [
        2 - x21 * x21 - x12 * x21,
        3 - x11 * x11 - x22 * x22,
        x22,
    ], [INEQ] * 3)
    prob = GnepProblem((p1, p2), sp)
    assert not validate(prob)
    name = "ex6.6"
    write(f"{name}.problem", problem_to_text(prob))
    write(f"{name}.manifest", manifest_text(
        f"{name}.problem",
        [{"source": "sos-search", "degree": 2, "v": [0.0, 0.0, 0.0, 0.0]}
         for _ in (1, 2)]))


# -------------------------------------------------------------- ex6.7i / ex6.7ii

def build_ex67(variant):
    sp = make_space([2, 2, 2])
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(2)]
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(2)]
    x3 = [Polynomial.variable(sp, "x[3]", j) for j in range(2)]
    f1 = x2[0] * x1[0] ** 2 + x2[1] * x1[1] ** 2 \
        - x3[0] ** 2 * x1[0] - x3[1] ** 2 * x1[1]
    f2 = x2[0] ** 3 + x2[1] ** 3 - x1[0] * x2[0] * x3[0] - x1[1] * x2[1] * x3[1]
    total = sum(x1, Polynomial.zero(sp)) + sum(x2, Polynomial.zero(sp)) \
        + sum(x3, Polynomial.zero(sp))
    if variant == "i":
        f3 = total * total - x3[0] - x3[1]
    else:
        diff = (x1[0] - x1[1]) + (x2[0] - x2[1]) + (x3[0] - x3[1])
        f3 = diff * diff - x3[0] - x3[1]
    g1 = 1 + poly_dot(x2, x2) - poly_dot(x1, x1)
    g2 = 1 + poly_dot(x3, x3) - x2[0] - x2[1]
    p1 = PlayerProblem.from_kinds(0, 2, f1, [g1], [INEQ])
    p2 = PlayerProblem.from_kinds(1, 2, f2, [g2, x2[0], x2[1]], [INEQ] * 3)
    p3 = PlayerProblem.from_kinds(2, 2, f3, [x3[0] - x1[0], x3[1] - x1[1]], [INEQ] * 2)
    prob = GnepProblem((p1, p2, p3), sp)
    assert not validate(prob)

    e1 = LagrangeExpression(RATIONAL, 0,
                            (poly_dot(x1, f1.gradient("x[1]")) * (-0.5),),
                            1 + poly_dot(x2, x2))
    q2 = 1 + poly_dot(x3, x3)
    grad_f2 = f2.gradient("x[2]")
    lam21 = -poly_dot(x2, grad_f2)
    e2 = LagrangeExpression(RATIONAL, 1,
                            (lam21, q2 * grad_f2[0] + lam21, q2 * grad_f2[1] + lam21),
                            q2)
    grad_f3 = f3.gradient("x[3]")
    e3 = LagrangeExpression(POLYNOMIAL, 2, (grad_f3[0], grad_f3[1]),
                            Polynomial.constant(sp, 1.0))
    return prob, [e1, e2, e3]


def emit_ex67():
    for variant in ("i", "ii"):
        name = f"ex6.7{variant}"
        prob, exprs = build_ex67(variant)
        write(f"{name}.problem", problem_to_text(prob))
        for i, e in enumerate(exprs, start=1):
            write(f"{name}.p{i}.expr", expression_to_text(e))
        write(f"{name}.manifest", manifest_text(
            f"{name}.problem",
            [{"source": "file", "expression": f"{name}.p{i}.expr"}
             for i in (1, 2, 3)]))


# ------------------------------------------------------------------ ex6.8 (A.3)

def emit_ex68():
    dims = [3, 2, 2]
    sp = make_space(dims)
    xs = [[Polynomial.variable(sp, f"x[{i + 1}]", j) for j in range(dims[i])]
          for i in range(3)]
    A = [np.array([[20.0, 5, 3], [5, 5, -5], [3, -5, 15]]),
         np.array([[11.0, -1], [-1, 9]]),
         np.array([[48.0, 39], [39, 53]])]
    B = [np.array([[-6.0, 10, 11, 20], [10, -4, -17, 9], [15, 8, -22, 21]]),
         np.array([[20.0, 1, -3, 12, 1], [10, -4, 8, 16, 21]]),
         np.array([[10.0, -2, 22, 12, 16], [9, 19, 21, -4, 20]])]
    bvec = [np.array([1.0, -1, 1]), np.array([1.0, 0]), np.array([-1.0, 2])]
    others = [xs[1] + xs[2], xs[0] + xs[2], xs[0] + xs[1]]

    players = []
    for i in range(3):
        f = Polynomial.zero(sp)
        for a in range(dims[i]):
            for c in range(dims[i]):
                if A[i][a, c]:
                    f = f + 0.5 * A[i][a, c] * xs[i][a] * xs[i][c]
        for a in range(dims[i]):
            lin = Polynomial.constant(sp, bvec[i][a])
            for c, xo in enumerate(others[i]):
                if B[i][a, c]:
                    lin = lin + B[i][a, c] * xo
            f = f + xs[i][a] * lin
        cons = []
        for a in range(dims[i]):
            cons.append(xs[i][a] + 10)
            cons.append(10 - xs[i][a])
        if i == 0:
            cons.append(20 - xs[0][0] - xs[0][1] - xs[0][2])
            cons.append(xs[1][0] - xs[2][1] + 5 - xs[0][0] - xs[0][1] + xs[0][2])
        elif i == 1:
            cons.append(xs[0][1] + xs[0][2] - xs[2][0] + 7 - xs[1][0] + xs[1][1])
        else:
            cons.append(xs[0][0] + xs[0][2] - xs[1][0] + 4 - xs[2][1])
        players.append(PlayerProblem.from_kinds(i, dims[i], f, cons,
                                                [INEQ] * len(cons)))
    prob = GnepProblem(tuple(players), sp)
    assert not validate(prob)
    name = "ex6.8-A.3"
    write(f"{name}.problem", problem_to_text(prob))
    sources = []
    for i in range(3):
        sources.append({"source": "template", "template": "box",
                        "bounds": [-10.0, 10.0] * dims[i]})
    write(f"{name}.manifest", manifest_text(f"{name}.problem", sources))


# --------------------------------------------------------- ex6.9 market (N = 3)

def emit_ex69():
    dims = [3, 3, 2]
    sp = make_space(dims)
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(3)]
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(3)]
    xm = [Polynomial.variable(sp, "x[3]", j) for j in range(2)]
    # the market's third coordinate is eliminated by the unit-sum constraint
    xN = [xm[0], xm[1], 1 - xm[0] - xm[1]]
    Q1 = np.array([[1.0, -1, 1], [-1, 2, 0], [1, 0, 2]])
    b1 = np.array([0.5, 1.0, 1.5])
    xi1 = np.array([1.0, 1.0, 1.0])
    a12 = 0.3

    f1 = Polynomial.zero(sp)
    for a in range(3):
        for c in range(3):
            if Q1[a, c]:
                f1 = f1 + 0.5 * Q1[a, c] * x1[a] * x1[c]
        f1 = f1 - b1[a] * x1[a]
    budget_rhs = sum((xi1[j] * xN[j] for j in range(3)), Polynomial.zero(sp)) \
        + a12 * sum((xN[j] * x2[j] for j in range(3)), Polynomial.zero(sp))
    budget = budget_rhs - sum((xN[j] * x1[j] for j in range(3)), Polynomial.zero(sp))
    p1 = PlayerProblem.from_kinds(0, 3, f1, [budget, x1[0], x1[1], x1[2]], [INEQ] * 4)

    f2 = -sum((xN[j] * x2[j] for j in range(3)), Polynomial.zero(sp))
    cap = 1 - poly_dot(x2, x2)
    p2 = PlayerProblem.from_kinds(1, 3, f2, [cap, x2[0], x2[1], x2[2]], [INEQ] * 4)

    f3 = sum((xN[j] * (x2[j] - x1[j] + xi1[j]) for j in range(3)), Polynomial.zero(sp))
    p3 = PlayerProblem.from_kinds(2, 2, f3, [1 - xm[0] - xm[1], xm[0], xm[1]],
                                  [INEQ] * 3)
    prob = GnepProblem((p1, p2, p3), sp)
    assert not validate(prob)

    grad_f1 = f1.gradient("x[1]")
    lam11 = -poly_dot(x1, grad_f1)
    q1 = budget_rhs
    lams1 = (lam11,) + tuple(q1 * grad_f1[j] + xN[j] * lam11 for j in range(3))
    e1 = LagrangeExpression(RATIONAL, 0, lams1, q1)

    grad_f2 = f2.gradient("x[2]")
    lam21 = poly_dot(x2, grad_f2) * (-0.5)
    lams2 = (lam21,) + tuple(grad_f2[j] + 2 * x2[j] * lam21 for j in range(3))
    e2 = LagrangeExpression(POLYNOMIAL, 1, lams2, Polynomial.constant(sp, 1.0))

    name = "ex6.9-market-N3"
    write(f"{name}.problem", problem_to_text(prob))
    write(f"{name}.p1.expr", expression_to_text(e1))
    write(f"{name}.p2.expr", expression_to_text(e2))
    write(f"{name}.manifest", manifest_text(
        f"{name}.problem",
        [{"source": "file", "expression": f"{name}.p1.expr"},
         {"source": "file", "expression": f"{name}.p2.expr"},
         {"source": "template", "template": "simplex"}]))


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    emit_ex61()
    emit_ex62()
    emit_ex63()
    emit_ex64()
    emit_ex65()
    emit_ex66()
    emit_ex67()
    emit_ex68()
    emit_ex69()
    print("corpus regenerated")


if __name__ == "__main__":
    main()
