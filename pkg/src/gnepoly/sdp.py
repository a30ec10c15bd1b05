"""Small-scale semidefinite programming with infeasibility certificates.

Problems are linear conic programs over a variable vector x:

    minimize    c'x
    subject to  const_b + M_b x  = 0          (zero blocks)
                const_b + M_b x >= 0          (nonneg blocks)
                C_b + sum_j x_j F_{b,j} PSD   (psd blocks)

The solve path is an interior-point method on the self-dual embedding
(cvxopt's cone LP solver) with Nesterov-Todd scaling.  A custom KKT solver
assembles the Schur complement block by block, which keeps moment-style
problems (few thousand variables, PSD blocks of a few hundred) tractable;
problem data is pre-equilibrated by block norms before the solve.  Returned
certificates are re-validated against the problem data before the status is
surfaced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

import cvxopt
from cvxopt import solvers as _cvx_solvers

ZERO = "zero"
NONNEG = "nonneg"
PSD = "psd"


def _sym_from_lower(flat: np.ndarray, nb: int) -> np.ndarray:
    """Rebuild a symmetric matrix from cvxopt's unpacked 'L' storage.

    Only the lower triangle of the stored full matrix is authoritative.
    """
    M = flat.reshape(nb, nb)
    L = np.tril(M)
    return L + np.tril(M, -1).T

OPTIMAL = "Optimal"
PRIMAL_INFEASIBLE = "PrimalInfeasible"
DUAL_INFEASIBLE = "DualInfeasible"
INACCURATE = "Inaccurate"
FAILED = "Failed"


class SdpError(ValueError):
    pass


@dataclass
class LinearBlock:
    """Rows ``const + M x`` constrained to a linear cone (zero or nonneg)."""

    kind: str
    nrows: int
    rows: np.ndarray      # triplet row indices
    cols: np.ndarray      # triplet variable indices
    vals: np.ndarray
    const: np.ndarray

    def matrix(self, nvars: int) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)),
                             shape=(self.nrows, nvars))


@dataclass
class PsdBlock:
    """Affine symmetric matrix ``C + sum_j x_j F_j`` constrained PSD.

    Triplets are stored canonically with i <= j; var index -1 marks the
    constant matrix C.
    """

    size: int
    ii: np.ndarray
    jj: np.ndarray
    var: np.ndarray
    vals: np.ndarray

    def eval(self, x: np.ndarray) -> np.ndarray:
        M = np.zeros((self.size, self.size))
        w = np.where(self.var < 0, 1.0, 0.0) + np.where(
            self.var < 0, 0.0, x[np.maximum(self.var, 0)])
        np.add.at(M, (self.ii, self.jj), self.vals * w)
        np.add.at(M, (self.jj, self.ii),
                  np.where(self.ii != self.jj, self.vals * w, 0.0))
        return M

    def direction(self, x: np.ndarray) -> np.ndarray:
        """sum_j x_j F_j without the constant matrix (for ray checks)."""
        M = np.zeros((self.size, self.size))
        mask = self.var >= 0
        ii, jj = self.ii[mask], self.jj[mask]
        w = self.vals[mask] * x[self.var[mask]]
        np.add.at(M, (ii, jj), w)
        np.add.at(M, (jj, ii), np.where(ii != jj, w, 0.0))
        return M


@dataclass
class SdpProblem:
    num_vars: int
    objective: np.ndarray
    blocks: list

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        if self.objective.shape[0] != self.num_vars:
            raise SdpError("objective length != num_vars")
        if self.num_vars < 1 or not self.blocks:
            raise SdpError("structurally empty problem")
        for b in self.blocks:
            cols = b.cols if isinstance(b, LinearBlock) else b.var
            if cols.size and (cols.max(initial=-1) >= self.num_vars or cols.min(initial=0) < -1):
                raise SdpError("variable index out of range in block data")

    def eval_block(self, block, x: np.ndarray) -> np.ndarray:
        if isinstance(block, LinearBlock):
            return block.const + block.matrix(self.num_vars) @ x
        return block.eval(x)


@dataclass
class SdpOptions:
    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    accept_tol: float = 1e-7
    max_iters: int = 200
    show_progress: bool = False


@dataclass
class SdpSolution:
    status: str
    x: np.ndarray | None
    eq_duals: list
    cone_duals: list
    primal_objective: float | None
    dual_objective: float | None
    residuals: dict
    certificate: dict | None
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def primal_accuracy(self) -> float:
        """Primal feasibility residual (the dual side may be looser)."""
        v = self.residuals.get("primal")
        return v if isinstance(v, float) else math.inf


# -- builder -------------------------------------------------------------------

class SdpBuilder:
    """Incremental construction of an SdpProblem."""

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.objective = np.zeros(num_vars)
        self.blocks: list = []

    def add_objective(self, var: int, val: float):
        self.objective[var] += val

    def add_linear_block(self, kind: str, rows):
        """rows: iterable of (const, [(var, val), ...])."""
        ri, ci, vv, consts = [], [], [], []
        for r, (const, entries) in enumerate(rows):
            consts.append(float(const))
            for var, val in entries:
                ri.append(r)
                ci.append(var)
                vv.append(float(val))
        blk = LinearBlock(kind, len(consts), np.array(ri, dtype=np.int64),
                          np.array(ci, dtype=np.int64), np.array(vv),
                          np.array(consts))
        if blk.nrows:
            self.blocks.append(blk)
        return blk

    def add_psd_block(self, size: int, triplets):
        """triplets: iterable of (i, j, var, val); var -1 for the constant."""
        acc: dict[tuple[int, int, int], float] = {}
        for i, j, var, val in triplets:
            if i > j:
                i, j = j, i
            key = (i, j, var)
            acc[key] = acc.get(key, 0.0) + float(val)
        items = sorted(acc.items())
        blk = PsdBlock(size,
                       np.array([k[0] for k, _ in items], dtype=np.int64),
                       np.array([k[1] for k, _ in items], dtype=np.int64),
                       np.array([k[2] for k, _ in items], dtype=np.int64),
                       np.array([v for _, v in items]))
        self.blocks.append(blk)
        return blk

    def build(self) -> SdpProblem:
        return SdpProblem(self.num_vars, self.objective, self.blocks)


# -- conversion to the cone-LP form ---------------------------------------------

class _ConeData:
    """Equilibrated cvxopt-form data plus per-block metadata for the KKT solver."""

    def __init__(self, prob: SdpProblem):
        n = prob.num_vars
        self.n = n
        zero_blocks = [b for b in prob.blocks if isinstance(b, LinearBlock) and b.kind == ZERO]
        nn_blocks = [b for b in prob.blocks if isinstance(b, LinearBlock) and b.kind == NONNEG]
        psd_blocks = [b for b in prob.blocks if isinstance(b, PsdBlock)]
        self.zero_blocks = zero_blocks
        self.nn_blocks = nn_blocks
        self.psd_blocks = psd_blocks

        # objective scaling
        self.obj_scale = max(1.0, np.abs(prob.objective).max())
        self.c = prob.objective / self.obj_scale

        # equalities:  M x = -const, row-equilibrated
        ri, ci, vv, rhs, self.eq_row_scale = [], [], [], [], []
        r0 = 0
        for b in zero_blocks:
            M = b.matrix(n).tocsr()
            for r in range(b.nrows):
                row = M.getrow(r)
                s = max(np.abs(row.data).max(initial=0.0), abs(b.const[r]), 1e-12)
                ri.extend(row.indices * 0 + (r0 + r))
                ci.extend(row.indices)
                vv.extend(row.data / s)
                rhs.append(-b.const[r] / s)
                self.eq_row_scale.append(s)
            r0 += b.nrows
        self.p = r0
        self.A = sp.csr_matrix((vv, (ri, ci)), shape=(self.p, n))
        self.b = np.array(rhs)
        self.eq_row_scale = np.array(self.eq_row_scale) if self.eq_row_scale else np.zeros(0)

        # nonneg rows:  G x + s = h  with  G = -M/s_r, h = const/s_r
        ri, ci, vv, hh, self.nn_row_scale = [], [], [], [], []
        r0 = 0
        for b in nn_blocks:
            M = b.matrix(n).tocsr()
            for r in range(b.nrows):
                row = M.getrow(r)
                s = max(np.abs(row.data).max(initial=0.0), abs(b.const[r]), 1e-12)
                ri.extend([r0 + r] * row.indices.shape[0])
                ci.extend(row.indices)
                vv.extend(-row.data / s)
                hh.append(b.const[r] / s)
                self.nn_row_scale.append(s)
            r0 += b.nrows
        self.l = r0
        self.Gl = sp.csr_matrix((vv, (ri, ci)), shape=(self.l, n))
        self.hl = np.array(hh)
        self.nn_row_scale = np.array(self.nn_row_scale) if self.nn_row_scale else np.zeros(0)

        # layout of cone duals in problem block order (zero blocks excluded)
        self.cone_layout = []
        nn_start = 0
        psd_idx = 0
        for b in prob.blocks:
            if isinstance(b, LinearBlock):
                if b.kind == NONNEG:
                    self.cone_layout.append((NONNEG, nn_start, b.nrows))
                    nn_start += b.nrows
            else:
                self.cone_layout.append((PSD, psd_idx, b.size))
                psd_idx += 1

        # psd blocks, scaled by max |entry|; store triplets of cvxopt's G (-F)
        self.psd = []
        for b in psd_blocks:
            s = max(np.abs(b.vals).max(initial=0.0), 1e-12)
            mask = b.var >= 0
            self.psd.append({
                "size": b.size,
                "scale": s,
                "ii": b.ii[mask], "jj": b.jj[mask],
                "var": b.var[mask], "gval": -b.vals[mask] / s,
                "c_ii": b.ii[~mask], "c_jj": b.jj[~mask],
                "c_val": b.vals[~mask] / s,
            })
        self._finalize_cvx()
        self._prepare_kkt()

    def _finalize_cvx(self):
        n = self.n
        rows_G = [self.Gl]
        h_parts = [self.hl]
        for blk in self.psd:
            nb = blk["size"]
            # full-vec rows (column-major): position (i,j) -> j*nb + i, both triangles
            ii, jj, var, val = blk["ii"], blk["jj"], blk["var"], blk["gval"]
            off_diag = ii != jj
            r1 = jj * nb + ii
            r2 = ii * nb + jj
            rr = np.concatenate([r1, r2[off_diag]])
            cc = np.concatenate([var, var[off_diag]])
            vv = np.concatenate([val, val[off_diag]])
            rows_G.append(sp.csr_matrix((vv, (rr, cc)), shape=(nb * nb, n)))
            h = np.zeros(nb * nb)
            np.add.at(h, blk["c_jj"] * nb + blk["c_ii"], blk["c_val"])
            extra = blk["c_ii"] != blk["c_jj"]
            np.add.at(h, blk["c_ii"][extra] * nb + blk["c_jj"][extra], blk["c_val"][extra])
            h_parts.append(h)
        G = sp.vstack(rows_G).tocoo()
        self.G_cvx = cvxopt.spmatrix(G.data, G.row.astype(int), G.col.astype(int),
                                     (G.shape[0], n))
        self.h_cvx = cvxopt.matrix(np.concatenate(h_parts) if h_parts else np.zeros(0))
        A = self.A.tocoo()
        self.A_cvx = cvxopt.spmatrix(A.data, A.row.astype(int), A.col.astype(int),
                                     (self.p, n))
        self.b_cvx = cvxopt.matrix(self.b if self.p else np.zeros(0))
        self.c_cvx = cvxopt.matrix(self.c)
        self.dims = {"l": self.l, "q": [], "s": [blk["size"] for blk in self.psd]}

    def _prepare_kkt(self):
        """Per-psd-block structures for fast Schur assembly."""
        self.kkt_psd = []
        for blk in self.psd:
            nb = blk["size"]
            var = blk["var"]
            vset, vinv = np.unique(var, return_inverse=True)
            K = vset.shape[0]
            order = np.argsort(vinv, kind="stable")
            ii, jj, val, vloc = blk["ii"][order], blk["jj"][order], blk["gval"][order], vinv[order]
            counts = np.bincount(vloc, minlength=K)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            tri_i, tri_j = np.triu_indices(nb)
            tri_pos = {}
            for t, (a, bb) in enumerate(zip(tri_i, tri_j)):
                tri_pos[(a, bb)] = t
            tcol = np.array([tri_pos[(a, bb)] for a, bb in zip(ii, jj)], dtype=np.int64)
            w2 = np.where(ii == jj, 1.0, 2.0) * val
            P2 = sp.csr_matrix((w2, (vloc, tcol)),
                               shape=(K, tri_i.shape[0]))
            self.kkt_psd.append({
                "size": nb, "vars": vset, "indptr": indptr,
                "ii": ii, "jj": jj, "val": val, "vloc": vloc,
                "tri_i": tri_i, "tri_j": tri_j, "P2": P2,
                # flat scatter positions for both triangles
                "flat1": ii * nb + jj, "flat2": jj * nb + ii,
            })


# -- custom KKT solver -----------------------------------------------------------

_REG = 1e-11
_CHUNK = 96


def _make_kktsolver(data: _ConeData):
    n, p, l = data.n, data.p, data.l
    Gl = data.Gl
    GlT = Gl.T.tocsr()
    A = data.A
    A_dense = A.toarray() if p else np.zeros((0, n))
    history: list[float] = []

    def kktsolver(W):
        di = np.array(W["di"]).ravel() if l else np.zeros(0)
        di2 = di * di
        rtis = []
        Lambdas_inv = []
        for k, blk in enumerate(data.kkt_psd):
            rti = np.array(W["rti"][k])
            rtis.append(rti)
            Lambdas_inv.append(rti @ rti.T)  # (W'W)^{-1} acts as X -> Li X Li
        # scaling sanity: bail out (cvxopt treats ArithmeticError as a
        # singular KKT system and stops with the current iterate) when the
        # scaling degenerates or stops moving, instead of stalling for the
        # whole iteration budget.
        mag = max([np.abs(d).max(initial=0.0) for d in (di,)]
                  + [np.abs(L).max(initial=0.0) for L in Lambdas_inv])
        if not np.isfinite(mag) or mag > 1e60:
            raise ArithmeticError("degenerate NT scaling")
        history.append(mag)
        # a converging interior point grows the scaling geometrically; a
        # large scaling that stops moving means the iteration is stuck at
        # its accuracy floor
        if len(history) >= 12 and history[-1] > 1e8 \
                and np.ptp(history[-10:]) <= 0.5 * abs(history[-1]):
            raise ArithmeticError("stalled NT scaling")
        H = np.zeros((n, n))
        if l:
            D = sp.diags(di2)
            H += (GlT @ D @ Gl).toarray()
        for k, blk in enumerate(data.kkt_psd):
            _accumulate_psd_schur(H, blk, Lambdas_inv[k])
        scale = max(H.diagonal().max(initial=0.0), 1.0)
        H_reg = H.copy()
        H_reg[np.diag_indices(n)] += _REG * scale

        solve_saddle = None
        try:
            cho = sla.cho_factor(H_reg, check_finite=False)
            if p:
                HinvAT = sla.cho_solve(cho, A_dense.T, check_finite=False)
                S = A_dense @ HinvAT
                S[np.diag_indices(p)] += _REG * max(S.diagonal().max(initial=0.0), 1.0)
                choS = sla.cho_factor(S, check_finite=False)

                def solve_saddle(rx, ry):
                    t = sla.cho_solve(cho, rx, check_finite=False)
                    uy = sla.cho_solve(choS, A_dense @ t - ry, check_finite=False)
                    ux = t - HinvAT @ uy
                    return ux, uy
            else:
                def solve_saddle(rx, ry):
                    return sla.cho_solve(cho, rx, check_finite=False), np.zeros(0)
        except np.linalg.LinAlgError:
            K = np.zeros((n + p, n + p))
            K[:n, :n] = H_reg
            if p:
                K[:n, n:] = A_dense.T
                K[n:, :n] = A_dense
                K[n:, n:] = -_REG * scale * np.eye(p)
            lu = sla.lu_factor(K, check_finite=False)

            def solve_saddle(rx, ry):
                sol = sla.lu_solve(lu, np.concatenate([rx, ry]), check_finite=False)
                return sol[:n], sol[n:]

        def apply_H(v):
            out = H @ v
            return out

        def f(x, y, z):
            # Mirrors cvxopt's kkt_chol data flow: the raw full-storage psd
            # rhs first gets the W^{-T} congruence, then is read through its
            # lower triangle (pack semantics).
            bx = np.array(x).ravel()[:n].copy()
            by = np.array(y).ravel()[:p].copy() if p else np.zeros(0)
            bz = np.array(z).ravel().copy()
            v_l = di2 * bz[:l] if l else np.zeros(0)
            bz_eff = []   # effective symmetric bz per psd block (lower mirror)
            off = l
            for k, blk in enumerate(data.kkt_psd):
                nb = blk["size"]
                M = bz[off:off + nb * nb].reshape(nb, nb).T  # column-major
                L = np.tril(M)
                bz_eff.append(L + np.tril(M, -1).T)
                off += nb * nb
            # rhs_x = bx + G' (W'W)^{-1} bz
            rhs = bx.copy()
            if l:
                rhs += GlT @ v_l
            for k, blk in enumerate(data.kkt_psd):
                V = Lambdas_inv[k] @ bz_eff[k] @ Lambdas_inv[k]
                sv = V[blk["tri_i"], blk["tri_j"]]
                rhs[blk["vars"]] += blk["P2"] @ sv
            ux, uy = solve_saddle(rhs, by)
            # one refinement pass on the saddle system
            r_x = rhs - apply_H(ux) - (A_dense.T @ uy if p else 0.0)
            r_y = by - (A_dense @ ux if p else np.zeros(0))
            dx, dy = solve_saddle(r_x, r_y)
            ux += dx
            uy += dy
            # W uz = W^{-T}(G ux - bz), written back full-symmetric
            out_z = np.empty_like(bz)
            if l:
                gz = Gl @ ux - bz[:l]
                out_z[:l] = di * gz  # d^{-1}(G ux - bz)
            off = l
            for k, blk in enumerate(data.kkt_psd):
                nb = blk["size"]
                rti = rtis[k]
                buf = np.zeros(nb * nb)
                w = blk["val"] * ux[blk["vars"]][blk["vloc"]]
                np.add.at(buf, blk["flat1"], w)
                odm = blk["flat1"] != blk["flat2"]
                np.add.at(buf, blk["flat2"][odm], w[odm])
                D = buf.reshape(nb, nb) - bz_eff[k]
                Wu = rti.T @ D @ rti       # r^{-1} (G ux - bz) r^{-T}
                Wu = 0.5 * (Wu + Wu.T)
                out_z[off:off + nb * nb] = Wu.reshape(-1)
                off += nb * nb
            x[:n] = cvxopt.matrix(ux)
            if p:
                y[:p] = cvxopt.matrix(uy)
            z[:] = cvxopt.matrix(out_z)

        return f

    return kktsolver


def _accumulate_psd_schur(H: np.ndarray, blk: dict, Lam_inv: np.ndarray):
    """H[v,w] += tr(G_v Lam_inv G_w Lam_inv) over the block's variables."""
    nb = blk["size"]
    vars_ = blk["vars"]
    K = vars_.shape[0]
    indptr = blk["indptr"]
    ii, jj, val = blk["ii"], blk["jj"], blk["val"]
    tri_i, tri_j, P2 = blk["tri_i"], blk["tri_j"], blk["P2"]
    for start in range(0, K, _CHUNK):
        stop = min(start + _CHUNK, K)
        c = stop - start
        lo, hi = indptr[start], indptr[stop]
        loc = blk["vloc"][lo:hi] - start
        Q = np.zeros((c, nb, nb))
        flat = loc * (nb * nb) + ii[lo:hi] * nb + jj[lo:hi]
        np.add.at(Q.reshape(-1), flat, val[lo:hi])
        odm = ii[lo:hi] != jj[lo:hi]
        flat2 = loc[odm] * (nb * nb) + jj[lo:hi][odm] * nb + ii[lo:hi][odm]
        np.add.at(Q.reshape(-1), flat2, val[lo:hi][odm])
        T = Lam_inv @ Q @ Lam_inv
        Tsv = T[:, tri_i, tri_j]
        Hc = P2 @ Tsv.T  # (K, c)
        H[np.ix_(vars_, vars_[start:stop])] += Hc


# -- solve and classify ----------------------------------------------------------

def solve_sdp(prob: SdpProblem, opts: SdpOptions | None = None) -> SdpSolution:
    """Solve; statuses carry validated certificates or best-iterate data.

    Two phases: first a run at the target tolerances, then (when that ends
    undecided) a run at the acceptance tolerances, which stops the interior
    point from wandering on instances that cannot reach the target.
    """
    opts = opts or SdpOptions()
    data = _ConeData(prob)
    phases = [
        (opts.abstol, opts.reltol, opts.feastol, min(60, opts.max_iters)),
        (opts.accept_tol, opts.accept_tol, opts.accept_tol, min(120, opts.max_iters)),
    ]
    best = None
    for phase, (abstol, reltol, feastol, iters) in enumerate(phases):
        solver_opts = {
            "show_progress": opts.show_progress,
            "maxiters": iters,
            "abstol": abstol,
            "reltol": reltol,
            "feastol": feastol,
            "refinement": 1,
        }
        try:
            sol = _cvx_solvers.conelp(
                data.c_cvx, data.G_cvx, data.h_cvx, dims=data.dims,
                A=data.A_cvx, b=data.b_cvx,
                kktsolver=_make_kktsolver(data), options=solver_opts)
        except (ArithmeticError, ValueError, ZeroDivisionError) as exc:
            out = SdpSolution(FAILED, None, [], [], None, None,
                              {"error": str(exc)}, None, 0)
            best = best or out
            continue
        out = _classify(prob, data, sol, opts)
        if out.status in (OPTIMAL, PRIMAL_INFEASIBLE, DUAL_INFEASIBLE):
            return out
        if best is None or _residual_score(out) < _residual_score(best):
            best = out
        # primal-side accuracy is already at the acceptance level: a second
        # run cannot certify more, the dual is at its accuracy floor
        if phase == 0 and out.primal_accuracy() <= opts.accept_tol:
            break
    return best


def _residual_score(sol: SdpSolution) -> float:
    if sol.status == FAILED or not sol.residuals:
        return math.inf
    vals = [v for v in sol.residuals.values() if isinstance(v, float)]
    return max(vals) if vals else math.inf


def _unpack_cone_duals(data: _ConeData, zvec: np.ndarray):
    """Cone duals in problem block order (nonneg slices, psd matrices)."""
    psd_mats = []
    off = data.l
    for blk in data.psd:
        nb = blk["size"]
        psd_mats.append(_sym_from_lower(zvec[off:off + nb * nb], nb) / blk["scale"])
        off += nb * nb
    nn = (zvec[:data.l] / data.nn_row_scale) if data.l else np.zeros(0)
    duals = []
    for kind, idx, size in data.cone_layout:
        if kind == NONNEG:
            duals.append(nn[idx:idx + size])
        else:
            duals.append(psd_mats[idx])
    return duals


def _classify(prob: SdpProblem, data: _ConeData, sol: dict, opts: SdpOptions) -> SdpSolution:
    its = sol.get("iterations", 0)
    status = sol["status"]
    tol = opts.accept_tol

    def optimal_solution():
        x = np.array(sol["x"]).ravel()
        y = np.array(sol["y"]).ravel() if data.p else np.zeros(0)
        z = np.array(sol["z"]).ravel()
        pobj = float(prob.objective @ x)
        res, dobj_scaled = _solution_residuals(prob, data, x, y, z)
        dobj = dobj_scaled * data.obj_scale
        eq_duals = (y / data.eq_row_scale * data.obj_scale) if data.p else np.zeros(0)
        cone_duals = [d * data.obj_scale for d in _unpack_cone_duals(data, z)]
        if max(res["primal"], res["dual"], res["gap"]) <= tol:
            st = OPTIMAL
        else:
            st = INACCURATE
        return SdpSolution(st, x, [eq_duals], cone_duals, pobj, dobj, res, None, its)

    def primal_infeasible():
        y = np.array(sol["y"]).ravel() if data.p else np.zeros(0)
        z = np.array(sol["z"]).ravel()
        cert = _map_infeasibility_certificate(prob, data, y, z)
        ok, res = validate_certificate(prob, PRIMAL_INFEASIBLE, cert, tol)
        if ok:
            return SdpSolution(PRIMAL_INFEASIBLE, None, [], [], None, 1.0,
                               res, cert, its)
        return SdpSolution(INACCURATE, None, [], [], None, None, res, cert, its)

    def dual_infeasible():
        x = np.array(sol["x"]).ravel()
        s = float(prob.objective @ x)
        cert = {"kind": DUAL_INFEASIBLE, "x": x / max(-s, 1e-300) if s < 0 else x}
        ok, res = validate_certificate(prob, DUAL_INFEASIBLE, cert, tol)
        if ok:
            return SdpSolution(DUAL_INFEASIBLE, None, [], [], None, None, res, cert, its)
        return SdpSolution(INACCURATE, x, [], [], None, None, res, cert, its)

    if status == "optimal":
        return optimal_solution()
    if status == "primal infeasible":
        return primal_infeasible()
    if status == "dual infeasible":
        return dual_infeasible()

    # status unknown: try to promote using whatever cvxopt returned
    if sol.get("x") is not None:
        out = optimal_solution()
        if out.status == OPTIMAL:
            return out
    rp = sol.get("residual as primal infeasibility certificate")
    if rp is not None and rp <= tol and sol.get("z") is not None:
        y = np.array(sol["y"]).ravel() if data.p else np.zeros(0)
        z = np.array(sol["z"]).ravel()
        cert = _map_infeasibility_certificate(prob, data, y, z)
        ok, res = validate_certificate(prob, PRIMAL_INFEASIBLE, cert, tol)
        if ok:
            return SdpSolution(PRIMAL_INFEASIBLE, None, [], [], None, 1.0, res, cert, its)
    x = np.array(sol["x"]).ravel() if sol.get("x") is not None else None
    res = {}
    if x is not None:
        y = np.array(sol["y"]).ravel() if data.p else np.zeros(0)
        z = np.array(sol["z"]).ravel() if sol.get("z") is not None else np.zeros(
            data.l + sum(b["size"] ** 2 for b in data.psd))
        res, _ = _solution_residuals(prob, data, x, y, z)
    return SdpSolution(INACCURATE, x, [], [],
                       float(prob.objective @ x) if x is not None else None,
                       None, res, None, its)


def _solution_residuals(prob: SdpProblem, data: _ConeData, x, y, z):
    """Residuals in original units plus the scaled dual objective value."""
    pres = 0.0
    for blk in prob.blocks:
        v = prob.eval_block(blk, x)
        if isinstance(blk, LinearBlock):
            scale = max(1.0, np.abs(blk.const).max(initial=0.0))
            if blk.kind == ZERO:
                pres = max(pres, np.abs(v).max(initial=0.0) / scale)
            else:
                pres = max(pres, -v.min(initial=0.0) / scale)
        else:
            w = sla.eigvalsh(v, check_finite=False)
            pres = max(pres, -w.min() / max(1.0, np.abs(v).max()))
    # dual feasibility: c + A'y + G'z = 0 in scaled data
    dres_vec = data.c.copy()
    if data.p:
        dres_vec += data.A.T @ y
    if data.l:
        dres_vec += data.Gl.T @ z[:data.l]
    off = data.l
    dobj = float(-(data.hl @ z[:data.l])) if data.l else 0.0
    for k, blk in enumerate(data.kkt_psd):
        nb = blk["size"]
        Z = _sym_from_lower(z[off:off + nb * nb], nb)
        sv = Z[blk["tri_i"], blk["tri_j"]]
        dres_vec[blk["vars"]] += blk["P2"] @ sv
        raw = data.psd[k]
        hmat = np.zeros((nb, nb))
        np.add.at(hmat, (raw["c_ii"], raw["c_jj"]), raw["c_val"])
        extra = raw["c_ii"] != raw["c_jj"]
        np.add.at(hmat, (raw["c_jj"][extra], raw["c_ii"][extra]), raw["c_val"][extra])
        dobj -= float(np.sum(hmat * Z))
        off += nb * nb
    if data.p:
        dobj -= float(data.b @ y)
    dres = np.abs(dres_vec).max(initial=0.0)
    pobj = float(data.c @ x)
    gap = abs(pobj - dobj) / max(1.0, abs(pobj))
    return {"primal": float(pres), "dual": float(dres), "gap": float(gap)}, dobj


def _map_infeasibility_certificate(prob, data: _ConeData, y, z) -> dict:
    """Map a scaled-problem ray back to original units and renormalize.

    The certificate convention is: with all duals d_b (eq duals free, cone
    duals in the dual cone), sum_b M_b' d_b = 0 and sum_b <const_b, d_b> = -1,
    which contradicts feasibility of the constraints const_b + M_b x in K_b.
    """
    y0 = -(y / data.eq_row_scale) if data.p else np.zeros(0)
    cone = _unpack_cone_duals(data, z)
    val = 0.0
    eq_off = 0
    k = 0
    for blk in prob.blocks:
        if isinstance(blk, LinearBlock) and blk.kind == ZERO:
            val += float(blk.const @ y0[eq_off:eq_off + blk.nrows])
            eq_off += blk.nrows
            continue
        if isinstance(blk, LinearBlock):
            val += float(blk.const @ cone[k])
        else:
            C = blk.eval(np.zeros(prob.num_vars))
            val += float(np.sum(C * cone[k]))
        k += 1
    scale = -val if val < 0 else 1.0
    return {"kind": PRIMAL_INFEASIBLE,
            "eq_dual": y0 / scale,
            "cone_duals": [d / scale for d in cone]}


def validate_certificate(prob: SdpProblem, status: str, cert: dict,
                         tol: float = 1e-7) -> tuple[bool, dict]:
    """Re-check a certificate against the raw problem data."""
    if status == PRIMAL_INFEASIBLE:
        y = cert["eq_dual"]
        cone = cert["cone_duals"]
        comb = np.zeros(prob.num_vars)
        val = 0.0
        mineig = 0.0
        eq_off, k = 0, 0
        norm = 1.0
        for blk in prob.blocks:
            if isinstance(blk, LinearBlock) and blk.kind == ZERO:
                yb = y[eq_off:eq_off + blk.nrows]
                comb += blk.matrix(prob.num_vars).T @ yb
                val += float(blk.const @ yb)
                norm = max(norm, np.abs(yb).max(initial=0.0))
                eq_off += blk.nrows
                continue
            zb = cone[k]
            k += 1
            if isinstance(blk, LinearBlock):
                comb += blk.matrix(prob.num_vars).T @ zb
                val += float(blk.const @ zb)
                mineig = min(mineig, zb.min(initial=0.0))
                norm = max(norm, np.abs(zb).max(initial=0.0))
            else:
                # <F_j, Z> per variable
                Z = zb
                w = blk.vals * np.where(blk.ii == blk.jj, 1.0, 2.0)
                contrib = w * Z[blk.ii, blk.jj]
                mask = blk.var >= 0
                np.add.at(comb, blk.var[mask], contrib[mask])
                val += float(contrib[~mask].sum())
                mineig = min(mineig, float(sla.eigvalsh(Z, check_finite=False).min())
                             / max(1.0, np.abs(Z).max()))
                norm = max(norm, np.abs(Z).max(initial=0.0))
        res = {"stationarity": float(np.abs(comb).max(initial=0.0) / norm),
               "ray_value": float(val),
               "cone_violation": float(-mineig)}
        ok = (res["stationarity"] <= tol * 10 and res["cone_violation"] <= tol * 10
              and val <= -0.5)
        return ok, res
    if status == DUAL_INFEASIBLE:
        x = cert["x"]
        obj = float(prob.objective @ x)
        worst = 0.0
        for blk in prob.blocks:
            if isinstance(blk, LinearBlock):
                v = blk.matrix(prob.num_vars) @ x
                worst = max(worst, np.abs(v).max(initial=0.0) if blk.kind == ZERO
                            else -v.min(initial=0.0))
            else:
                D = blk.direction(x)
                worst = max(worst, -float(sla.eigvalsh(D, check_finite=False).min())
                            / max(1.0, np.abs(D).max()))
        res = {"ray_feasibility": float(worst), "objective_along_ray": obj}
        return (worst <= tol * 10 and obj <= -0.5), res
    raise SdpError(f"no certificate semantics for status {status}")


# -- text interchange format -----------------------------------------------------

def problem_to_text(prob: SdpProblem) -> str:
    lines = ["sdp 1", f"vars {prob.num_vars}", "minimize"]
    for j in np.nonzero(prob.objective)[0]:
        lines.append(f"c {j} {prob.objective[j]:.17g}")
    for blk in prob.blocks:
        if isinstance(blk, LinearBlock):
            lines.append(f"block {blk.kind} {blk.nrows}")
            for r in np.nonzero(blk.const)[0]:
                lines.append(f"b {r} {blk.const[r]:.17g}")
            for r, cvar, v in zip(blk.rows, blk.cols, blk.vals):
                lines.append(f"a {r} {cvar} {v:.17g}")
        else:
            lines.append(f"block psd {blk.size}")
            for i, j, var, v in zip(blk.ii, blk.jj, blk.var, blk.vals):
                lines.append(f"m {i} {j} {var} {v:.17g}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def problem_from_text(text: str) -> SdpProblem:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "sdp 1":
        raise SdpError("not a gnepoly sdp file")
    if not lines[1].startswith("vars "):
        raise SdpError("missing vars line")
    nvars = int(lines[1].split()[1])
    builder = SdpBuilder(nvars)
    i = 2
    if i < len(lines) and lines[i] == "minimize":
        i += 1
        while i < len(lines) and lines[i].startswith("c "):
            _, j, v = lines[i].split()
            builder.add_objective(int(j), float(v))
            i += 1
    while i < len(lines) and lines[i] != "end":
        tok = lines[i].split()
        if tok[0] != "block":
            raise SdpError(f"expected block, got {lines[i]!r}")
        kind, size = tok[1], int(tok[2])
        i += 1
        if kind in (ZERO, NONNEG):
            const = np.zeros(size)
            entries: list[list] = [[] for _ in range(size)]
            while i < len(lines) and lines[i].split()[0] in ("a", "b"):
                tok = lines[i].split()
                if tok[0] == "b":
                    const[int(tok[1])] = float(tok[2])
                else:
                    entries[int(tok[1])].append((int(tok[2]), float(tok[3])))
                i += 1
            builder.add_linear_block(kind, [(const[r], entries[r]) for r in range(size)])
        elif kind == PSD:
            trip = []
            while i < len(lines) and lines[i].startswith("m "):
                _, a, b, var, v = lines[i].split()
                trip.append((int(a), int(b), int(var), float(v)))
                i += 1
            builder.add_psd_block(size, trip)
        else:
            raise SdpError(f"unknown block kind {kind!r}")
    return builder.build()
