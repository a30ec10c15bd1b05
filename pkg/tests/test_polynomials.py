import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnepoly.fileio import ParseError, format_polynomial, parse_polynomial
from gnepoly.polynomials import (Monomial, PolyMatrix, Polynomial, PolynomialError,
                                 VariableSpace, det_and_adjugate, monomial_basis,
                                 poly_dot)


@pytest.fixture
def space2():
    return VariableSpace([("z", 2)])


def _vars(space):
    return [Polynomial.from_flat(space, i) for i in range(space.total_dim)]


def test_space_indexing():
    sp = VariableSpace([("x[1]", 3), ("x[2]", 2), ("w[1]", 1)])
    assert sp.total_dim == 6
    assert sp.flat_index("x[2]", 1) == 4
    assert sp.coordinate_name(5) == "w[1][1]"
    with pytest.raises(PolynomialError):
        sp.flat_index("x[3]", 0)
    with pytest.raises(PolynomialError):
        VariableSpace([("a", 1), ("a", 2)])


def test_monomial_basis_graded_order(space2):
    basis = monomial_basis(space2, None, 3)
    assert len(basis) == 10
    expect = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
              (3, 0), (2, 1), (1, 2), (0, 3)]
    assert basis == expect
    # degree <= t basis is a prefix of the degree <= d basis
    assert monomial_basis(space2, None, 2) == basis[:6]


def test_monomial_basis_constant_and_counts():
    sp = VariableSpace([("z", 4)])
    assert monomial_basis(sp, None, 0) == [(0, 0, 0, 0)]
    for m, d in [(3, 2), (4, 3), (2, 5)]:
        spm = VariableSpace([("z", m)])
        assert len(monomial_basis(spm, None, d)) == math.comb(m + d, d)


def test_monomial_basis_block_subset():
    sp = VariableSpace([("x[1]", 2), ("x[2]", 1)])
    basis = monomial_basis(sp, ["x[2]"], 2)
    assert basis == [(0, 0, 0), (0, 0, 1), (0, 0, 2)]
    with pytest.raises(PolynomialError):
        monomial_basis(sp, ["nope"], 1)


def test_monomial_invariants():
    m = Monomial((2, 0, 1))
    assert m.degree == 3
    with pytest.raises(PolynomialError):
        Monomial((1, -1))


def test_product_examples(space2):
    z1, z2 = _vars(space2)
    assert ((z1 + 1) * (z1 - 1) - (z1 * z1 - 1)).is_zero()
    assert (z1 * Polynomial.zero(space2)).is_zero()
    assert ((2 * z1) * (3 * z2) - 6 * z1 * z2).is_zero()


def test_product_space_mismatch(space2):
    other = VariableSpace([("y", 2)])
    with pytest.raises(PolynomialError):
        _vars(space2)[0] * Polynomial.from_flat(other, 0)


def test_gradient_examples():
    sp = VariableSpace([("x[1]", 2), ("x[2]", 1)])
    x11, x12 = (Polynomial.variable(sp, "x[1]", j) for j in range(2))
    x21 = Polynomial.variable(sp, "x[2]", 0)
    p = x11 * x11 + x12 * x21
    gx, gy = p.gradient("x[1]")
    assert (gx - 2 * x11).is_zero()
    assert (gy - x21).is_zero()
    assert all(g.is_zero() for g in Polynomial.constant(sp, 3.0).gradient("x[1]"))
    with pytest.raises(PolynomialError):
        p.gradient("x[9]")


def test_gradient_of_squared_distance():
    # the first objective of the bundled two-player game
    sp = VariableSpace([("x[1]", 3), ("x[2]", 3)])
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(3)]
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(3)]
    f1 = sum(((a - b) ** 2 for a, b in zip(x1, x2)), Polynomial.zero(sp))
    grad = f1.gradient("x[1]")
    for j in range(3):
        assert (grad[j] - 2 * (x1[j] - x2[j])).is_zero()


def test_eval_examples(space2):
    z1, _ = _vars(space2)
    assert (z1 * z1 + 1).eval([2.0, 0.0]) == 5.0
    assert Polynomial.zero(space2).eval([7.0, -1.0]) == 0.0
    with pytest.raises(PolynomialError):
        z1.eval([1.0])


def test_eval_against_naive_summation():
    # second objective of the bundled two-player game at its equilibrium
    sp = VariableSpace([("x[1]", 3), ("x[2]", 3)])
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(3)]
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(3)]
    f2 = sum((b ** 4 for b in x2), Polynomial.zero(sp)) \
        - sum(x2, Polynomial.zero(sp)) * (x1[0] * x1[1] * x1[2])
    u = np.array([2 ** (1 / 3) / math.sqrt(3)] * 3 + [108 ** (-1 / 6)] * 3)

    def naive(p, pt):
        total = 0.0
        for mono, c in sorted(p.terms.items()):
            total += c * float(np.prod(np.power(pt, np.array(mono))))
        return total

    assert f2.eval(u) == pytest.approx(naive(f2, u), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_product_eval_consistency(seed):
    rng = np.random.default_rng(seed)
    nvars = int(rng.integers(1, 5))
    sp = VariableSpace([("z", nvars)])
    basis = monomial_basis(sp, None, 3)

    def rand_poly():
        terms = {}
        for mono in basis:
            if rng.random() < 0.4:
                terms[mono] = float(rng.standard_normal())
        return Polynomial(sp, terms)

    p, q = rand_poly(), rand_poly()
    pq = p * q
    z = rng.standard_normal(nvars)
    lhs = pq.eval(z)
    rhs = p.eval(z) * q.eval(z)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    sp = VariableSpace([("z", 3)])
    basis = monomial_basis(sp, None, 3)
    for _ in range(10):
        terms = {m: float(rng.standard_normal()) for m in basis if rng.random() < 0.5}
        p = Polynomial(sp, terms)
        z = rng.uniform(-1, 1, 3)
        for j in range(3):
            h = 1e-6
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            fd = (p.eval(zp) - p.eval(zm)) / (2 * h)
            assert abs(p.diff(j).eval(z) - fd) < 1e-6


def test_degree_conventions(space2):
    z1, z2 = _vars(space2)
    assert Polynomial.zero(space2).degree() == 0
    assert (z1 * z2 * z2 + 1).degree() == 3
    # cleanup drops tiny coefficients
    p = Polynomial(space2, {(1, 0): 1e-15})
    assert p.is_zero()


def test_embed_and_substitute():
    small = VariableSpace([("x[1]", 2)])
    big = VariableSpace([("x[1]", 2), ("x[2]", 1)])
    p = Polynomial.variable(small, "x[1]", 1) ** 2
    q = p.embed(big)
    assert q.space == big
    assert q.eval([0.0, 3.0, 9.0]) == 9.0
    target = VariableSpace([("x[2]", 1)])
    x2 = Polynomial.variable(big, "x[2]", 0)
    mixed = x2 * Polynomial.variable(big, "x[1]", 0) + x2
    frozen = mixed.substitute({0: 2.0, 1: -1.0}, target, keep=[2])
    assert (frozen - 3 * Polynomial.variable(target, "x[2]", 0)).is_zero()


def test_parse_format_round_trip():
    sp = VariableSpace([("x[1]", 2), ("x[2]", 3), ("w[1]", 1)])
    text = "2*x[1][1]^2 - 1*x[2][3] + 0.5*w[1][1]*x[1][2]"
    p = parse_polynomial(text, sp)
    again = parse_polynomial(format_polynomial(p), sp)
    assert p == again
    # rational coefficient literal
    q = parse_polynomial("1/3*x[1][1] - 1", sp)
    assert q.terms[(1, 0, 0, 0, 0, 0)] == pytest.approx(1 / 3)


def test_parse_rejects_garbage():
    sp = VariableSpace([("x[1]", 1)])
    for bad in ["", "x[1][2]", "1 +", "2**x[1][1]", "x[1][1] @ 2"]:
        with pytest.raises((ParseError, PolynomialError)):
            parse_polynomial(bad, sp)


def test_det_and_adjugate_small():
    sp = VariableSpace([("z", 2)])
    z1, z2 = _vars(sp)
    mat = PolyMatrix([[z1, z2], [1 - z2, z1 * z1]])
    det, adj = det_and_adjugate(mat)
    expect = z1 ** 3 - z2 * (1 - z2)
    assert (det - expect).max_abs_coeff() < 1e-12
    # adjugate identity: adj(M) M = det I
    prod = adj.matmul(mat)
    for r in range(2):
        for c in range(2):
            diff = prod[r, c] - det if r == c else prod[r, c]
            assert diff.max_abs_coeff() < 1e-12


def test_det_random_matches_numeric():
    rng = np.random.default_rng(1)
    sp = VariableSpace([("z", 2)])
    basis = monomial_basis(sp, None, 1)
    for m in (2, 3, 4):
        entries = [[Polynomial(sp, {b: float(rng.standard_normal()) for b in basis})
                    for _ in range(m)] for _ in range(m)]
        mat = PolyMatrix(entries)
        det, adj = det_and_adjugate(mat)
        z = rng.standard_normal(2)
        numeric = np.array([[p.eval(z) for p in row] for row in entries])
        assert det.eval(z) == pytest.approx(np.linalg.det(numeric), rel=1e-9, abs=1e-9)


def test_poly_dot_validation(space2):
    z1, z2 = _vars(space2)
    assert (poly_dot([z1, z2], [z2, z1]) - 2 * z1 * z2).is_zero()
    with pytest.raises(PolynomialError):
        poly_dot([z1], [z1, z2])
