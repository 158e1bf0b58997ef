"""Dense-tableau primal simplex for box-bounded LPs.

Solves ``max c.x  s.t.  A x <= b,  lo <= x <= hi`` with a two-phase method.
Finite upper bounds are handled by complementing a variable when it moves to
its bound, so they never become tableau rows.  Dantzig pricing switches to
Bland's rule after a streak of degenerate pivots.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DEGENERATE_STREAK = 50
MAX_TABLEAU_CELLS = 50_000_000  # about 400 MB of float64


class LpError(RuntimeError):
    pass


@dataclass
class LpResult:
    x: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded | iteration_limit
    iterations: int = 0
    bland: bool = False

    @property
    def ok(self):
        return self.status == "optimal"


class _Tableau:
    def __init__(self, T, basis, upper):
        self.T = T
        self.basis = basis
        self.upper = upper
        self.flipped = np.zeros(T.shape[1] - 1, dtype=bool)
        self.iterations = 0
        self.bland = False
        self._streak = 0

    def complement(self, j):
        u = self.upper[j]
        T = self.T
        T[:, -1] -= T[:, j] * u
        T[:, j] *= -1.0
        self.flipped[j] = not self.flipped[j]

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if len(nz):
            T[nz] -= np.outer(col[nz], T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j

    def run(self, allowed, max_iter):
        T = self.T
        rows = T.shape[0] - 1
        if T.shape[1] == 1:
            return "optimal"
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            d = T[-1, :-1]
            if self.bland:
                cand = np.flatnonzero((d < -PIVOT_TOL) & allowed)
                if not len(cand):
                    return "optimal"
                j = int(cand[0])
            else:
                masked = np.where(allowed, d, 0.0)
                j = int(np.argmin(masked))
                if masked[j] >= -PIVOT_TOL:
                    return "optimal"
            col = T[:rows, j]
            rhs = T[:rows, -1]
            ub = self.upper[self.basis]
            best = self.upper[j]
            leave, to_upper = -1, False
            pos = col > PIVOT_TOL
            if pos.any():
                r_pos = np.flatnonzero(pos)
                ratios = np.maximum(rhs[r_pos], 0.0) / col[r_pos]
                k = _argmin_tie(ratios, self.basis[r_pos])
                if ratios[k] < best:
                    best, leave, to_upper = ratios[k], int(r_pos[k]), False
            neg = (col < -PIVOT_TOL) & np.isfinite(ub)
            if neg.any():
                r_neg = np.flatnonzero(neg)
                ratios = np.maximum(ub[r_neg] - rhs[r_neg], 0.0) / -col[r_neg]
                k = _argmin_tie(ratios, self.basis[r_neg])
                if ratios[k] < best - 1e-12:
                    best, leave, to_upper = ratios[k], int(r_neg[k]), True
            if not np.isfinite(best):
                return "unbounded"
            self.iterations += 1
            if best <= PIVOT_TOL:
                self._streak += 1
                if self._streak > DEGENERATE_STREAK and not self.bland:
                    log.debug("degenerate streak; switching to Bland's rule")
                    self.bland = True
            else:
                # progress was made, so returning to Dantzig cannot cycle
                self._streak = 0
                self.bland = False
            if leave < 0:
                self.complement(j)
                continue
            out = int(self.basis[leave])
            self.pivot(leave, j)
            if to_upper:
                self.complement(out)


def _argmin_tie(ratios, basis_idx):
    lo = ratios.min()
    ties = np.flatnonzero(ratios <= lo + 1e-12)
    if len(ties) == 1:
        return int(ties[0])
    return int(ties[np.argmin(basis_idx[ties])])


def linprog_max(c, A, b, lo=None, hi=None, max_iter: int = 50_000) -> LpResult:
    """Maximize ``c.x`` subject to ``A x <= b`` and ``lo <= x <= hi``.

    ``lo`` defaults to 0 and must be finite; ``hi`` defaults to +inf.
    """
    c = np.asarray(c, dtype=np.float64)
    nvar = len(c)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if (len(b) + 1) * (nvar + 2 * len(b) + 1) > MAX_TABLEAU_CELLS:
        raise LpError(f"{len(b)} x {nvar} LP is too large for the dense tableau")
    A = np.asarray(A.toarray() if hasattr(A, "toarray") else A, dtype=np.float64).reshape(len(b), nvar)
    lo = np.zeros(nvar) if lo is None else np.asarray(lo, dtype=np.float64)
    hi = np.full(nvar, np.inf) if hi is None else np.asarray(hi, dtype=np.float64)
    if np.any(~np.isfinite(lo)):
        raise LpError("lower bounds must be finite")
    if np.any(hi < lo - FEAS_TOL):
        return LpResult(lo.copy(), float("nan"), "infeasible")

    span = hi - lo
    free = np.flatnonzero(span > FEAS_TOL)
    const = float(c @ lo)
    rhs = b - A @ lo
    Af = A[:, free]
    cf = c[free]
    uf = span[free]

    # Drop all-zero rows once the fixed part is moved right.
    nz_rows = np.any(np.abs(Af) > 0, axis=1)
    if np.any(rhs[~nz_rows] < -FEAS_TOL):
        return LpResult(lo.copy(), float("nan"), "infeasible")
    Af, rhs = Af[nz_rows], rhs[nz_rows]
    R, V = Af.shape

    neg = rhs < 0
    n_art = int(neg.sum())
    ncol = V + R + n_art
    T = np.zeros((R + 1, ncol + 1))
    T[:R, :V] = Af
    T[:R, V:V + R] = np.eye(R)
    T[:R, -1] = rhs
    T[np.flatnonzero(neg)] *= -1.0
    basis = np.arange(V, V + R)
    art_rows = np.flatnonzero(neg)
    for k, r in enumerate(art_rows):
        T[r, V + R + k] = 1.0
        basis[r] = V + R + k
    upper = np.concatenate([uf, np.full(R + n_art, np.inf)])
    tab = _Tableau(T, basis, upper)

    if n_art:
        T[-1, V + R:ncol] = 1.0
        T[-1] -= T[art_rows].sum(axis=0)
        status = tab.run(np.ones(ncol, dtype=bool), max_iter)
        if status != "optimal":
            return LpResult(lo.copy(), float("nan"), status, tab.iterations, tab.bland)
        if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(rhs).max()):
            return LpResult(lo.copy(), float("nan"), "infeasible", tab.iterations, tab.bland)
        # Drive remaining (zero-valued) artificials out of the basis.
        for r in range(R):
            if tab.basis[r] >= V + R:
                cand = np.flatnonzero(np.abs(T[r, :V + R]) > 1e-7)
                if len(cand):
                    tab.pivot(r, int(cand[0]))
        keep = tab.basis < V + R
        T = np.concatenate([T[:R][keep], T[-1:]], axis=0)
        T = np.delete(T, np.arange(V + R, ncol), axis=1)
        tab.T = T
        tab.basis = tab.basis[keep]
        tab.upper = upper[:V + R]
        tab.flipped = tab.flipped[:V + R]

    T = tab.T
    # Phase II objective row in the current (possibly complemented) coordinates.
    row = np.zeros(T.shape[1])
    row[:V] = np.where(tab.flipped[:V], cf, -cf)
    row[-1] = float(np.sum(cf[tab.flipped[:V]] * uf[tab.flipped[:V]]))
    for r, j in enumerate(tab.basis):
        if row[j] != 0.0:
            row -= row[j] * T[r]
    T[-1] = row
    status = tab.run(np.ones(T.shape[1] - 1, dtype=bool), max_iter)

    y = np.zeros(T.shape[1] - 1)
    y[tab.basis] = T[:-1, -1]
    y = np.where(tab.flipped, tab.upper - y, y)
    x = lo.copy()
    x[free] += np.clip(y[:V], 0.0, uf)
    obj = float(c @ x)
    if status == "optimal":
        resid = A @ x - b
        if resid.size and resid.max() > 1e-6 * (1.0 + np.abs(b).max()):
            raise LpError(f"constraint residual {resid.max():.3g} exceeds tolerance")
        if abs(obj - (T[-1, -1] + const)) > 1e-6 * (1.0 + abs(obj)):
            log.debug("objective drift %.3g", obj - (T[-1, -1] + const))
    return LpResult(x, obj, status, tab.iterations, tab.bland)
