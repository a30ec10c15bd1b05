"""Flat-truncation detection and minimizer extraction from moment vectors.

A truncated moment vector y of degree 2k over l variables is indexed by the
graded monomial basis (see polynomials.monomial_basis), so every moment
matrix of lower level is a leading principal submatrix of the top-level one.
Extraction follows the classical multiplication-matrix route: factor the
moment matrix, pick a low-degree monomial basis by column echelon, build the
shift operators, and read points off a joint eigendecomposition of a random
combination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
import scipy.linalg as sla

RANK_TOL = 1e-6


class ExtractionError(ValueError):
    pass


def _basis_exponents(l: int, d: int) -> list[tuple[int, ...]]:
    out = [tuple([0] * l)]
    for t in range(1, d + 1):
        for combo in combinations_with_replacement(range(l), t):
            e = [0] * l
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


@dataclass
class Tms:
    """Moment vector of degree 2k in l variables, graded indexing."""

    num_vars: int
    degree: int              # 2k
    values: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        expect = math.comb(self.num_vars + self.degree, self.degree)
        if self.values.shape[0] != expect:
            raise ExtractionError(
                f"moment vector has {self.values.shape[0]} entries, expected {expect}")
        if not self._index:
            for i, e in enumerate(_basis_exponents(self.num_vars, self.degree)):
                self._index[e] = i

    @property
    def order(self) -> int:
        return self.degree // 2

    def moment(self, exponents) -> float:
        return self.values[self._index[tuple(exponents)]]

    @classmethod
    def from_point(cls, point, degree: int) -> "Tms":
        """The moment vector of a unit point mass."""
        point = np.asarray(point, dtype=float).ravel()
        l = point.shape[0]
        vals = []
        for e in _basis_exponents(l, degree):
            v = 1.0
            for i, p in enumerate(e):
                if p:
                    v *= point[i] ** p
            vals.append(v)
        return cls(l, degree, np.array(vals))


def moment_matrix_from_tms(y: Tms, t: int) -> np.ndarray:
    """M_t[y]: rows/cols indexed by the degree-<=t basis."""
    if 2 * t > y.degree:
        raise ExtractionError(f"level {t} needs moments of degree {2 * t}")
    basis = _basis_exponents(y.num_vars, t)
    n = len(basis)
    M = np.empty((n, n))
    for i, a in enumerate(basis):
        for j in range(i, n):
            b = basis[j]
            M[i, j] = M[j, i] = y.moment(tuple(x + z for x, z in zip(a, b)))
    return M


def numeric_rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    """Singular values above tol * max(1, sigma_max)."""
    if M.size == 0:
        return 0
    s = sla.svdvals(M, check_finite=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def flat_truncation_check(y: Tms, d: int, t: int, tol: float = RANK_TOL) -> bool:
    """Rank of M_t equals rank of M_{t-d} (both at the given tolerance)."""
    if not (d <= t <= y.order):
        raise ExtractionError(f"level t={t} outside [{d}, {y.order}]")
    big = moment_matrix_from_tms(y, t)
    small = big[: math.comb(y.num_vars + t - d, t - d)][:, : math.comb(y.num_vars + t - d, t - d)]
    return numeric_rank(big, tol) == numeric_rank(small, tol)


@dataclass
class ExtractionResult:
    flat: bool
    rank: int
    points: list
    weights: np.ndarray
    residual: float


def extract_minimizers(y: Tms, t: int, r: int, seed: int = 0,
                       tol: float = RANK_TOL) -> ExtractionResult:
    """Recover r support points of a measure matching the moments of y.

    Assumes flat truncation was verified at level t with rank r (so a
    monomial basis of degree <= t-1 exists).  Raises ExtractionError when the
    numerics refuse: eigenvector failure, negative weights, or a moment
    reconstruction residual above 1e-6.
    """
    l = y.num_vars
    M = moment_matrix_from_tms(y, t)
    basis = _basis_exponents(l, t)
    n = len(basis)
    if not 1 <= r <= n:
        raise ExtractionError(f"rank {r} out of range for moment matrix of size {n}")

    # Symmetric factorization M ~= V V' with V of rank r.
    w, U = sla.eigh(M, check_finite=False)
    order = np.argsort(w)[::-1]
    w, U = w[order[:r]], U[:, order[:r]]
    if w[-1] < -tol * max(1.0, abs(w[0])):
        raise ExtractionError("moment matrix has significant negative eigenvalues")
    V = U * np.sqrt(np.maximum(w, 0.0))

    # Pivot rows scanned in graded order (column-echelon pivot selection):
    # the first r independent rows of V give a monomial basis of the column
    # space with the lowest degrees available.
    pivots = []
    Qrows = np.zeros((r, r))
    scale = max(np.abs(V).max(), 1e-300)
    for row in range(n):
        if len(pivots) == r:
            break
        w = V[row].copy()
        for k in range(len(pivots)):
            w -= (Qrows[k] @ w) * Qrows[k]
        nw = np.linalg.norm(w)
        if nw > 1e-8 * scale:
            Qrows[len(pivots)] = w / nw
            pivots.append(row)
    if len(pivots) < r:
        raise ExtractionError("could not find an independent monomial basis")

    # Express every basis row of V in pivot coordinates: rows of C satisfy
    # V = C * V[pivots].
    Vp = V[pivots]
    C = sla.lstsq(Vp.T, V.T, check_finite=False)[0].T  # n x r

    idx = {e: i for i, e in enumerate(basis)}
    shift_mats = []
    for var in range(l):
        N = np.empty((r, r))
        for a, prow in enumerate(pivots):
            e = list(basis[prow])
            e[var] += 1
            target = tuple(e)
            if sum(target) > t or target not in idx:
                raise ExtractionError("shifted basis monomial leaves the truncation")
            N[a] = C[idx[target]]
        shift_mats.append(N)

    rng = np.random.default_rng(seed)
    coeff = rng.random(l) + 0.5
    coeff /= coeff.sum()
    N = sum(c * Nv for c, Nv in zip(coeff, shift_mats))
    try:
        T, Q = sla.schur(N, output="real", check_finite=False)
    except sla.LinAlgError as exc:
        raise ExtractionError(f"eigen-solver failure: {exc}") from None
    points = []
    for a in range(r):
        q = Q[:, a]
        points.append(np.array([float(q @ Nv @ q) for Nv in shift_mats]))

    weights, residual = _fit_weights(y, t, points)
    if weights.min(initial=0.0) < -1e-6:
        raise ExtractionError(f"negative atom weight {weights.min():.3e}")
    if residual > 1e-6:
        raise ExtractionError(f"moment reconstruction residual {residual:.3e}")
    return ExtractionResult(True, r, points, weights, residual)


def _fit_weights(y: Tms, t: int, points) -> tuple[np.ndarray, float]:
    """Least-squares weights on the degree-<=2 moments; residual over the
    moments the atoms are expected to reproduce."""
    l = y.num_vars
    fit_basis = _basis_exponents(l, min(2, y.degree))
    A = np.empty((len(fit_basis), len(points)))
    b = np.empty(len(fit_basis))
    for i, e in enumerate(fit_basis):
        b[i] = y.moment(e)
        for j, pt in enumerate(points):
            v = 1.0
            for var, p in enumerate(e):
                if p:
                    v *= pt[var] ** p
            A[i, j] = v
    weights = sla.lstsq(A, b, check_finite=False)[0]
    # residual over all moments of degree <= 2(t - d) is reported relative to
    # the caller's truncation; use degree 2 ... 2t capped by available data
    check_deg = min(2 * t, y.degree)
    check_basis = _basis_exponents(l, check_deg)
    resid = 0.0
    for e in check_basis:
        v = 0.0
        for wgt, pt in zip(weights, points):
            term = wgt
            for var, p in enumerate(e):
                if p:
                    term *= pt[var] ** p
            v += term
        resid = max(resid, abs(v - y.moment(e)))
    return weights, resid
