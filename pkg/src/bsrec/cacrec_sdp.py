"""SDP relaxation of CAC-REC with random-projection rounding.

The matrix variable ``Y`` (standing in for ``X X^T``) is indexed by existing
edges only.  Besides the degree and conflict trace constraints the relaxation
carries ``diag(Y) <= 1`` and ``Y >= 0`` entrywise; both hold for every 0-1
``X X^T`` and without them the diagonal of ``Y`` is unbounded.

The solver is ADMM on the conic form ``min c.x  s.t.  A x + s = b,  s in K``
with ``x = svec(Y)`` and ``K`` = nonnegative orthant x PSD cone.  Each
iteration is one sparse solve with ``A^T A`` and one eigendecomposition.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .model import Instance, Recommendation, SolveReport, round_in_order, seller_conflict_sets

DEFAULT_CAP = 128
EIG_CLIP = 1e-9
SQRT2 = math.sqrt(2.0)


class SdpCapError(ValueError):
    """The instance has more edges than the SDP dimension cap."""


@dataclass
class SdpProgram:
    """Problem data; matrices are dense ``N x N`` with ``N = |E|``."""

    W: np.ndarray
    buyer_mats: list
    buyer_rhs: np.ndarray
    seller_mats: list
    seller_rhs: np.ndarray
    conflict_mats: list  # one per seller; zero matrix when C_k is empty
    conflict_rhs: np.ndarray
    conflict_sets: list
    edges: list

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    def constraint_values(self, Y):
        tr = lambda M: float(np.sum(M * Y))
        return (np.array([tr(M) for M in self.buyer_mats]),
                np.array([tr(M) for M in self.seller_mats]),
                np.array([tr(M) for M in self.conflict_mats]))

    def max_violation(self, Y) -> float:
        b, s, c = self.constraint_values(Y)
        v = [0.0]
        v += (b - self.buyer_rhs).tolist() + (s - self.seller_rhs).tolist() + (c - self.conflict_rhs).tolist()
        v += (np.diag(Y) - 1.0).tolist()
        v.append(float(-Y.min()) if Y.size else 0.0)
        return max(v)


def build_sdp(inst: Instance, cap: int = DEFAULT_CAP) -> SdpProgram:
    N = inst.num_edges
    if N > cap:
        raise SdpCapError(f"{N} edges exceed the SDP cap of {cap}; use --method ilp, lp-round or greedy")
    eb, es = inst.edge_buyer, inst.edge_seller
    W = np.diag(inst.weight.astype(np.float64))
    buyer_mats = [np.diag((eb == i).astype(np.float64)) for i in range(inst.m)]
    seller_mats = [np.diag((es == j).astype(np.float64)) for j in range(inst.n)]
    index = inst.edge_index()
    csets = seller_conflict_sets(inst)
    conflict_mats = []
    for k, pairs in enumerate(csets):
        C = np.zeros((N, N))
        for a, b in pairs:
            p, q = index[(a, k)], index[(b, k)]
            C[p, q] = C[q, p] = 0.5
        conflict_mats.append(C)
    return SdpProgram(W, buyer_mats, inst.buyer_bound.astype(np.float64), seller_mats,
                      inst.seller_bound.astype(np.float64), conflict_mats,
                      inst.threshold.astype(np.float64), csets, inst.edge_list())


# ---------------------------------------------------------------- svec helpers

class _Svec:
    def __init__(self, N):
        self.N = N
        self.iu = np.triu_indices(N)
        self.scale = np.where(self.iu[0] == self.iu[1], 1.0, SQRT2)
        pos = np.zeros((N, N), dtype=np.int64)
        pos[self.iu] = np.arange(len(self.scale))
        self.pos = pos + np.triu(pos, 1).T  # pos[i, j] for any order
        self.diag = pos[np.arange(N), np.arange(N)]

    def vec(self, M):
        return M[self.iu] * self.scale

    def mat(self, v):
        M = np.zeros((self.N, self.N))
        M[self.iu] = v / self.scale
        return M + np.triu(M, 1).T

    def psd_project(self, v):
        M = self.mat(v)
        lam, Q = np.linalg.eigh(M)
        lam = np.maximum(lam, 0.0)
        return self.vec((Q * lam) @ Q.T)


@dataclass
class SdpResult:
    Y: np.ndarray
    objective: float
    upper_bound: float
    converged: bool
    iterations: int
    max_violation: float
    min_eig: float
    history: list = field(default_factory=list)


def _conic_rows(prog: SdpProgram, sv: _Svec):
    """Linear rows ``a.x <= b`` in svec coordinates, redundant ones omitted."""
    N = prog.dim
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for mats, bounds in ((prog.buyer_mats, prog.buyer_rhs), (prog.seller_mats, prog.seller_rhs)):
        for M, d in zip(mats, bounds):
            idx = np.flatnonzero(np.diag(M))
            if len(idx) == 0 or d >= len(idx):
                continue  # implied by diag(Y) <= 1
            rows += [r] * len(idx); cols += sv.diag[idx].tolist(); vals += [1.0] * len(idx)
            rhs.append(d); r += 1
    for pairs, C, t in zip(prog.conflict_sets, prog.conflict_mats, prog.conflict_rhs):
        if not pairs or t >= len(pairs):
            continue  # |Y_pq| <= 1 already
        p, q = np.nonzero(np.triu(C, 1))
        rows += [r] * len(p); cols += sv.pos[p, q].tolist(); vals += [SQRT2 * 0.5] * len(p)
        rhs.append(t); r += 1
    for i in range(N):
        rows.append(r); cols.append(int(sv.diag[i])); vals.append(1.0); rhs.append(1.0); r += 1
    off = np.flatnonzero(sv.iu[0] != sv.iu[1])
    for q in off.tolist():
        rows.append(r); cols.append(q); vals.append(-1.0); rhs.append(0.0); r += 1
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, len(sv.scale)))
    return A, np.asarray(rhs, dtype=np.float64)


def dual_bound(prog: SdpProgram, sv: _Svec, A_lin, b_lin, y_lin, w_scale=1.0) -> float:
    """Upper bound on the relaxation from any nonnegative multipliers.

    For feasible ``Y``:  <W, Y> <= y.b - <S, Y>  with  S = sum_r y_r A_r - W,
    and ``<S, Y> >= min(0, lambda_min(S)) * trace(Y) >= min(0, lambda_min(S)) * N``.
    """
    y = np.maximum(y_lin, 0.0)
    S = sv.mat(A_lin.T @ y) - prog.W / w_scale
    lam = np.linalg.eigvalsh(S)[0] if prog.dim else 0.0
    return w_scale * (float(y @ b_lin) + prog.dim * max(0.0, -lam))


def solve_sdp(prog: SdpProgram, tol: float = 1e-7, max_iter: int = 20_000, rho: float = 0.01,
              alpha: float = 1.6, check_every: int = 10, adapt: bool = False) -> SdpResult:
    """ADMM with residual balancing; ``A^T A`` does not involve ``rho`` so one factorization serves all.

    Stops when the certified bound is within ``tol`` (relative) of ``<W, Y>``
    and every linear constraint holds to ``tol``.
    """
    N = prog.dim
    if N == 0:
        return SdpResult(np.zeros((0, 0)), 0.0, 0.0, True, 0, 0.0, 0.0)
    sv = _Svec(N)
    nx = len(sv.scale)
    w_scale = float(np.abs(np.diag(prog.W)).max())
    if w_scale == 0.0:
        w_scale = 1.0
    A_lin, b_lin = _conic_rows(prog, sv)
    p_lin = A_lin.shape[0]
    A = sparse.vstack([A_lin, -sparse.identity(nx, format="csr")], format="csr")
    b = np.concatenate([b_lin, np.zeros(nx)])
    c = -sv.vec(prog.W) / w_scale
    AtA = (A.T @ A).tocsc()
    solve = spla.factorized(AtA)

    x = np.zeros(nx)
    s = np.zeros(A.shape[0])
    y = np.zeros(A.shape[0])
    history = []
    best = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x = solve(A.T @ (b - s - y / rho) - c / rho)
        Ax = A @ x
        Ax_hat = alpha * Ax + (1 - alpha) * (b - s)
        v = b - Ax_hat - y / rho
        s_prev = s
        s = np.empty_like(v)
        s[:p_lin] = np.maximum(v[:p_lin], 0.0)
        s[p_lin:] = sv.psd_project(v[p_lin:])
        y = y + rho * (Ax_hat + s - b)
        if it % check_every and it != max_iter:
            continue
        if adapt:
            r_pri = np.linalg.norm(Ax + s - b)
            r_dual = rho * np.linalg.norm(A.T @ (s - s_prev))
            if r_pri > 10 * r_dual:
                rho *= 2.0
            elif r_dual > 10 * r_pri:
                rho /= 2.0
        # the PSD slack equals svec(Y) at convergence and is PSD by construction
        Y = sv.mat(s[p_lin:])
        obj = float(np.sum(np.diag(prog.W) * np.diag(Y)))
        ub = dual_bound(prog, sv, A_lin, b_lin, y[:p_lin], w_scale)
        viol = max(0.0, float((A_lin @ s[p_lin:] - b_lin).max(initial=0.0)))
        history.append((it, obj, ub, viol))
        scale = 1.0 + abs(obj)
        if best is None or ub < best[1]:
            best = (Y, ub)
        if ub - obj <= tol * scale and viol <= tol * max(1.0, float(np.abs(b_lin).max())):
            converged = True
            break
    Y = sv.mat(s[p_lin:])
    obj = float(np.sum(np.diag(prog.W) * np.diag(Y)))
    ub = min(best[1], dual_bound(prog, sv, A_lin, b_lin, y[:p_lin], w_scale))
    return SdpResult(Y, obj, ub, converged, it, prog.max_violation(Y),
                     float(np.linalg.eigvalsh(Y)[0]), history)


# ---------------------------------------------------------------- factor + round


def pivoted_cholesky(Y, tol=None):
    """``Y[piv][:, piv] = L L^T`` with ``L`` lower-trapezoidal of width ``rank``."""
    A = np.array(Y, dtype=np.float64)
    N = A.shape[0]
    piv = np.arange(N)
    L = np.zeros((N, N))
    if tol is None:
        tol = N * np.finfo(float).eps * max(1.0, float(np.abs(np.diag(A)).max(initial=0.0)))
    rank = 0
    for k in range(N):
        j = k + int(np.argmax(np.diag(A)[k:]))
        if A[j, j] <= tol:
            break
        if j != k:
            A[[k, j]] = A[[j, k]]
            A[:, [k, j]] = A[:, [j, k]]
            L[[k, j]] = L[[j, k]]
            piv[[k, j]] = piv[[j, k]]
        L[k, k] = math.sqrt(A[k, k])
        L[k + 1:, k] = A[k + 1:, k] / L[k, k]
        A[k + 1:, k + 1:] -= np.outer(L[k + 1:, k], L[k + 1:, k])
        rank += 1
    return L, piv, rank


def cholesky_vectors(Y, clip: float = EIG_CLIP) -> np.ndarray:
    """One vector per edge: rows ``v_e`` of ``V`` with ``V V^T = Y``.

    Eigenvalues below ``clip`` are zeroed before factoring; rank-deficient
    matrices go through the pivoted factorization.
    """
    Y = np.asarray(Y, dtype=np.float64)
    N = Y.shape[0]
    if N == 0:
        return np.zeros((0, 0))
    Y = (Y + Y.T) / 2
    lam, Q = np.linalg.eigh(Y)
    if lam[0] < -1e-6 * max(1.0, abs(lam[-1])):
        raise np.linalg.LinAlgError(f"matrix is not PSD (min eigenvalue {lam[0]:.3g})")
    if lam[0] < clip:
        Y = (Q * np.where(lam < clip, 0.0, lam)) @ Q.T
        Y = (Y + Y.T) / 2
    L, piv, _ = pivoted_cholesky(Y)
    V = np.zeros_like(L)
    V[piv] = L
    return V


def projection_scores(V, r):
    """Length of each vector's projection onto direction ``r``."""
    return np.abs(V @ r) / np.linalg.norm(r)


def round_sdp(vectors, inst: Instance, restarts: int = 20, seed: int = 0):
    """Best of ``restarts`` random-projection roundings."""
    t0 = time.perf_counter()
    V = np.asarray(vectors, dtype=np.float64)
    best_rec, best_k = Recommendation.empty(), -1
    if V.size and np.any(V):
        children = np.random.SeedSequence(seed).spawn(restarts)
        idx = np.arange(V.shape[0])
        for k, ss in enumerate(children):
            rng = np.random.Generator(np.random.PCG64(ss))
            r = rng.standard_normal(V.shape[1])
            score = projection_scores(V, r)
            keep = idx[score > 1e-12]
            order = keep[np.lexsort((keep, -score[keep]))]
            rec = Recommendation.from_edge_indices(inst, round_in_order(inst, order.tolist()))
            if rec.objective > best_rec.objective:
                best_rec, best_k = rec, k
    return best_rec, SolveReport("sdp", best_rec.objective, time.perf_counter() - t0, feasible=True,
                                 iterations=restarts, extra={"best_restart": best_k, "seed": seed})


def solve_sdp_rounding(inst: Instance, restarts: int = 20, seed: int = 0, cap: int = DEFAULT_CAP,
                       tol: float = 1e-7, max_iter: int = 20_000):
    """Relax, factor, round: the full SDP pipeline."""
    t0 = time.perf_counter()
    prog = build_sdp(inst, cap)
    res = solve_sdp(prog, tol=tol, max_iter=max_iter)
    V = cholesky_vectors(res.Y)
    rec, rep = round_sdp(V, inst, restarts, seed)
    rep.elapsed_s = time.perf_counter() - t0
    rep.upper_bound = res.upper_bound
    rep.iterations = res.iterations
    rep.extra.update({"sdp_objective": res.objective, "sdp_converged": res.converged,
                      "sdp_max_violation": res.max_violation})
    return rec, rep, res
