"""Sparse multivariate polynomials over named variable blocks.

Variables live in a :class:`VariableSpace` made of ordered blocks such as
``x[1], x[2], ..., w[1], ...``; a flat index enumerates all coordinates in
block order.  Polynomials are dicts mapping exponent tuples to float
coefficients.  Everything here is immutable after construction and pure, so
values can be shared freely across threads.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

# Coefficients below this magnitude are dropped after arithmetic.
COEFF_CLEANUP_TOL = 1e-14


class PolynomialError(ValueError):
    """Raised for ill-formed polynomial operations (space or degree misuse)."""


class VariableSpace:
    """Ordered named blocks of real variables with a flat global index."""

    __slots__ = ("blocks", "total_dim", "_offsets", "_by_name")

    def __init__(self, blocks: Sequence[tuple[str, int]]):
        names = [b[0] for b in blocks]
        if len(set(names)) != len(names):
            raise PolynomialError(f"duplicate block names in {names}")
        for name, dim in blocks:
            if dim < 1:
                raise PolynomialError(f"block {name} has dimension {dim} < 1")
        self.blocks = tuple((str(n), int(d)) for n, d in blocks)
        self._offsets = {}
        off = 0
        for name, dim in self.blocks:
            self._offsets[name] = off
            off += dim
        self.total_dim = off
        self._by_name = dict(self.blocks)

    def block_dim(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise PolynomialError(f"unknown block {name!r}") from None

    def block_offset(self, name: str) -> int:
        if name not in self._offsets:
            raise PolynomialError(f"unknown block {name!r}")
        return self._offsets[name]

    def flat_index(self, name: str, j: int) -> int:
        """Flat index of coordinate ``j`` (0-based) of the named block."""
        dim = self.block_dim(name)
        if not 0 <= j < dim:
            raise PolynomialError(f"index {j} out of range for block {name} (dim {dim})")
        return self._offsets[name] + j

    def block_indices(self, name: str) -> range:
        off = self.block_offset(name)
        return range(off, off + self.block_dim(name))

    def coordinate_name(self, flat: int) -> str:
        for name, dim in self.blocks:
            off = self._offsets[name]
            if off <= flat < off + dim:
                return f"{name}[{flat - off + 1}]"
        raise PolynomialError(f"flat index {flat} out of range")

    def __eq__(self, other) -> bool:
        return isinstance(other, VariableSpace) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}:{d}" for n, d in self.blocks)
        return f"VariableSpace({inner})"


class Monomial:
    """Exponent vector with cached total degree (dense tuple storage)."""

    __slots__ = ("exponents", "degree")

    def __init__(self, exponents: Sequence[int]):
        self.exponents = tuple(int(e) for e in exponents)
        if any(e < 0 for e in self.exponents):
            raise PolynomialError(f"negative exponent in {self.exponents}")
        self.degree = sum(self.exponents)

    def __eq__(self, other) -> bool:
        return isinstance(other, Monomial) and self.exponents == other.exponents

    def __hash__(self) -> int:
        return hash(self.exponents)

    def __repr__(self) -> str:
        return f"Monomial{self.exponents}"


def _monomial_count(nvars: int, degree: int) -> int:
    return math.comb(nvars + degree, degree)


def monomial_basis(space: VariableSpace, var_names: Sequence[str] | None, d: int):
    """All monomials of degree <= d in the selected blocks, graded order.

    Monomials of equal degree are ordered lexicographically by flat index
    (earlier coordinates carry higher exponents first), so the degree-<=t
    basis is a prefix of the degree-<=d basis for t <= d.  Returns a list of
    exponent tuples over the full space.
    """
    if d < 0:
        raise PolynomialError(f"negative degree {d}")
    if var_names is None:
        selected = list(range(space.total_dim))
    else:
        selected = []
        for name in var_names:
            selected.extend(space.block_indices(name))
    basis = [tuple([0] * space.total_dim)]
    for t in range(1, d + 1):
        for combo in combinations_with_replacement(selected, t):
            exps = [0] * space.total_dim
            for idx in combo:
                exps[idx] += 1
            basis.append(tuple(exps))
    assert len(basis) == _monomial_count(len(selected), d)
    return basis


class Polynomial:
    """Sparse real polynomial: map exponent tuple -> float coefficient."""

    __slots__ = ("space", "terms")

    def __init__(self, space: VariableSpace, terms: Mapping[tuple, float] | None = None,
                 *, _clean: bool = True):
        self.space = space
        if terms is None:
            self.terms = {}
        elif _clean:
            self.terms = {}
            for mono, c in terms.items():
                c = float(c)
                if abs(c) >= COEFF_CLEANUP_TOL:
                    if len(mono) != space.total_dim:
                        raise PolynomialError(
                            f"monomial arity {len(mono)} != space dim {space.total_dim}")
                    self.terms[tuple(mono)] = c
        else:
            self.terms = dict(terms)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, space: VariableSpace) -> "Polynomial":
        return cls(space, {}, _clean=False)

    @classmethod
    def constant(cls, space: VariableSpace, c: float) -> "Polynomial":
        if abs(c) < COEFF_CLEANUP_TOL:
            return cls.zero(space)
        mono = tuple([0] * space.total_dim)
        return cls(space, {mono: float(c)}, _clean=False)

    @classmethod
    def variable(cls, space: VariableSpace, name: str, j: int) -> "Polynomial":
        """Coordinate ``name[j+1]`` as a polynomial (j is 0-based)."""
        idx = space.flat_index(name, j)
        exps = [0] * space.total_dim
        exps[idx] = 1
        return cls(space, {tuple(exps): 1.0}, _clean=False)

    @classmethod
    def from_flat(cls, space: VariableSpace, flat: int) -> "Polynomial":
        exps = [0] * space.total_dim
        exps[flat] = 1
        return cls(space, {tuple(exps): 1.0}, _clean=False)

    # -- queries ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention."""
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def constant_term(self) -> float:
        return self.terms.get(tuple([0] * self.space.total_dim), 0.0)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Polynomial) and self.space == other.space
                and self.terms == other.terms)

    def __hash__(self) -> int:
        return hash((self.space, frozenset(self.terms.items())))

    # -- arithmetic ---------------------------------------------------------

    def _check_space(self, other: "Polynomial"):
        if self.space != other.space:
            raise PolynomialError("polynomials live in different variable spaces")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.space, other)
        self._check_space(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return Polynomial(self.space, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.space, {m: -c for m, c in self.terms.items()}, _clean=False)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.space, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                return Polynomial.zero(self.space)
            return Polynomial(self.space, {m: c * other for m, c in self.terms.items()})
        self._check_space(other)
        terms: dict[tuple, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, 0.0) + c1 * c2
        return Polynomial(self.space, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise PolynomialError("negative power")
        out = Polynomial.constant(self.space, 1.0)
        for _ in range(n):
            out = out * self
        return out

    # -- calculus and evaluation --------------------------------------------

    def diff(self, flat: int) -> "Polynomial":
        terms: dict[tuple, float] = {}
        for m, c in self.terms.items():
            e = m[flat]
            if e == 0:
                continue
            mm = list(m)
            mm[flat] = e - 1
            mm = tuple(mm)
            terms[mm] = terms.get(mm, 0.0) + c * e
        return Polynomial(self.space, terms)

    def gradient(self, block: str) -> list["Polynomial"]:
        """Partial gradient w.r.t. one block, one polynomial per coordinate."""
        return [self.diff(i) for i in self.space.block_indices(block)]

    def __call__(self, point) -> float:
        return self.eval(point)

    def eval(self, point) -> float:
        """Evaluate at a full assignment (length = total_dim), term by term."""
        pt = np.asarray(point, dtype=float).ravel()
        if pt.shape[0] != self.space.total_dim:
            raise PolynomialError(
                f"point dimension {pt.shape[0]} != space dim {self.space.total_dim}")
        total = 0.0
        for m, c in self.terms.items():
            v = c
            for idx, e in enumerate(m):
                if e:
                    v *= pt[idx] ** e
            total += v
        return total

    # -- space manipulation --------------------------------------------------

    def embed(self, space: VariableSpace) -> "Polynomial":
        """Reinterpret in a larger space containing all of this one's blocks."""
        if space == self.space:
            return self
        index_map = []
        for name, dim in self.space.blocks:
            if space.block_dim(name) != dim:
                raise PolynomialError(f"block {name} has different dimension in target space")
            off = space.block_offset(name)
            index_map.extend(range(off, off + dim))
        terms = {}
        for m, c in self.terms.items():
            exps = [0] * space.total_dim
            for src, e in enumerate(m):
                if e:
                    exps[index_map[src]] = e
            terms[tuple(exps)] = c
        return Polynomial(space, terms, _clean=False)

    def substitute(self, values: Mapping[int, float], space: VariableSpace,
                   keep: Sequence[int]) -> "Polynomial":
        """Fix some flat coordinates to numbers; remaining ones map to ``space``.

        ``keep`` lists, in order, the flat indices of this polynomial's space
        that become coordinates 0..len(keep)-1 of the target space.
        """
        pos = {flat: i for i, flat in enumerate(keep)}
        if len(pos) + len(values) < self.space.total_dim:
            missing = [i for i in range(self.space.total_dim)
                       if i not in pos and i not in values]
            raise PolynomialError(f"coordinates {missing} neither kept nor substituted")
        terms: dict[tuple, float] = {}
        for m, c in self.terms.items():
            exps = [0] * space.total_dim
            coeff = c
            ok = True
            for idx, e in enumerate(m):
                if not e:
                    continue
                if idx in pos:
                    exps[pos[idx]] = e
                else:
                    coeff *= values[idx] ** e
                if coeff == 0.0:
                    ok = False
                    break
            if ok:
                key = tuple(exps)
                terms[key] = terms.get(key, 0.0) + coeff
        return Polynomial(space, terms)

    # -- display -------------------------------------------------------------

    def __repr__(self) -> str:
        from .fileio import format_polynomial

        return f"Polynomial({format_polynomial(self)})"


def poly_product(p: Polynomial, q: Polynomial) -> Polynomial:
    """Exact coefficient convolution of two polynomials in one space."""
    return p * q


def partial_gradient(p: Polynomial, block: str) -> list[Polynomial]:
    return p.gradient(block)


def poly_eval(p: Polynomial, point) -> float:
    return p.eval(point)


def poly_dot(ps: Iterable[Polynomial], qs: Iterable[Polynomial]) -> Polynomial:
    """Sum of pairwise products; both iterables must be nonempty and aligned."""
    ps = list(ps)
    qs = list(qs)
    if len(ps) != len(qs) or not ps:
        raise PolynomialError("dot product needs two equal-length nonempty lists")
    out = Polynomial.zero(ps[0].space)
    for a, b in zip(ps, qs):
        out = out + a * b
    return out


class PolyMatrix:
    """Dense grid of polynomials sharing one variable space."""

    __slots__ = ("rows", "cols", "entries", "space")

    def __init__(self, entries: Sequence[Sequence[Polynomial]]):
        self.entries = [list(row) for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        if any(len(row) != self.cols for row in self.entries):
            raise PolynomialError("ragged polynomial matrix")
        if self.rows == 0 or self.cols == 0:
            raise PolynomialError("empty polynomial matrix")
        self.space = self.entries[0][0].space
        for row in self.entries:
            for p in row:
                if p.space != self.space:
                    raise PolynomialError("matrix entries live in different spaces")

    @classmethod
    def zeros(cls, space: VariableSpace, rows: int, cols: int) -> "PolyMatrix":
        z = Polynomial.zero(space)
        return cls([[z for _ in range(cols)] for _ in range(rows)])

    def __getitem__(self, rc):
        r, c = rc
        return self.entries[r][c]

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix([[self.entries[r][c] for r in range(self.rows)]
                           for c in range(self.cols)])

    def matmul(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise PolynomialError("matrix dimension mismatch")
        out = []
        for r in range(self.rows):
            row = []
            for c in range(other.cols):
                acc = Polynomial.zero(self.space)
                for k in range(self.cols):
                    acc = acc + self.entries[r][k] * other.entries[k][c]
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def matvec(self, vec: Sequence[Polynomial]) -> list[Polynomial]:
        if len(vec) != self.cols:
            raise PolynomialError("matrix-vector dimension mismatch")
        out = []
        for r in range(self.rows):
            acc = Polynomial.zero(self.space)
            for k in range(self.cols):
                acc = acc + self.entries[r][k] * vec[k]
            out.append(acc)
        return out

    def degree(self) -> int:
        return max(p.degree() for row in self.entries for p in row)

    def max_abs_coeff(self) -> float:
        return max(p.max_abs_coeff() for row in self.entries for p in row)

    def eval(self, point) -> np.ndarray:
        return np.array([[p.eval(point) for p in row] for row in self.entries])


def det_and_adjugate(mat: PolyMatrix) -> tuple[Polynomial, PolyMatrix]:
    """Symbolic determinant and adjugate by division-free cofactor expansion.

    Minors are memoized over (row-set, column-set) pairs, so the cost is
    O(3^m) polynomial products; intended for m <= 6.
    """
    if mat.rows != mat.cols:
        raise PolynomialError("determinant of a non-square matrix")
    m = mat.rows
    space = mat.space
    cache: dict[tuple[frozenset, frozenset], Polynomial] = {}

    def minor(rows: tuple[int, ...], cols: tuple[int, ...]) -> Polynomial:
        key = (frozenset(rows), frozenset(cols))
        got = cache.get(key)
        if got is not None:
            return got
        if len(rows) == 1:
            out = mat[rows[0], cols[0]]
        else:
            out = Polynomial.zero(space)
            r = rows[0]
            rest = rows[1:]
            for pos, c in enumerate(cols):
                sub_cols = cols[:pos] + cols[pos + 1:]
                term = mat[r, c] * minor(rest, sub_cols)
                out = out + (term if pos % 2 == 0 else -term)
        cache[key] = out
        return out

    all_idx = tuple(range(m))
    det = minor(all_idx, all_idx)
    if m == 1:
        adj = PolyMatrix([[Polynomial.constant(space, 1.0)]])
        return det, adj
    adj_entries = [[None] * m for _ in range(m)]
    for r in range(m):
        rows = all_idx[:r] + all_idx[r + 1:]
        for c in range(m):
            cols = all_idx[:c] + all_idx[c + 1:]
            cof = minor(rows, cols)
            if (r + c) % 2 == 1:
                cof = -cof
            adj_entries[c][r] = cof  # adjugate = transposed cofactor matrix
    return det, PolyMatrix(adj_entries)
