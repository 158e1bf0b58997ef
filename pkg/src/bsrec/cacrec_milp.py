"""Integer program for CAC-REC, LP rounding and branch-and-bound.

Variables are one ``x`` per edge followed by one ``z`` per (seller, conflict
pair) whose buyers are both adjacent to that seller.  ``z`` is tied to the AND of
its two ``x`` variables by

    x_a + x_b - z <= 1        and        2 z - x_a - x_b <= 0

and each seller limits the sum of its ``z`` to its threshold.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .cacrec_greedy import solve_greedy
from .crec import incidence_matrix
from .model import Instance, Recommendation, SolveReport, check_feasible, round_in_order, seller_conflict_sets
from .simplex import LpError, LpResult, linprog_max

INT_TOL = 1e-7
OBJ_RTOL = 1e-6


@dataclass
class MilpProgram:
    c: np.ndarray
    A: sparse.csr_matrix
    b: np.ndarray
    row_kind: list
    num_x: int
    z_pairs: list  # (seller, buyer_a, buyer_b, edge_a, edge_b)
    dropped_thresholds: list = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_z(self) -> int:
        return len(self.z_pairs)

    def bounds(self):
        return np.zeros(self.num_vars), np.ones(self.num_vars)


def build_milp(inst: Instance, drop_degenerate: bool = True) -> MilpProgram:
    E = inst.num_edges
    index = inst.edge_index()
    z_pairs = []
    per_seller = seller_conflict_sets(inst)
    for k, pairs in enumerate(per_seller):
        for a, b in pairs:
            z_pairs.append((k, a, b, index[(a, k)], index[(b, k)]))
    Z = len(z_pairs)
    nv = E + Z

    inc = incidence_matrix(inst).tocoo()
    rows, cols, vals = [inc.row], [inc.col], [inc.data]
    rhs = [np.concatenate([inst.buyer_bound, inst.seller_bound]).astype(np.float64)]
    kinds = [f"buyer {i + 1}" for i in range(inst.m)] + [f"seller {j + 1}" for j in range(inst.n)]
    r = inst.m + inst.n

    lr, lc, lv, lb = [], [], [], []
    for q, (k, a, b, ea, eb) in enumerate(z_pairs):
        z = E + q
        lr += [r, r, r]; lc += [ea, eb, z]; lv += [1.0, 1.0, -1.0]; lb.append(1.0)
        lr += [r + 1, r + 1, r + 1]; lc += [z, ea, eb]; lv += [2.0, -1.0, -1.0]; lb.append(0.0)
        kinds += [f"link>= seller {k + 1} ({a + 1},{b + 1})", f"link<= seller {k + 1} ({a + 1},{b + 1})"]
        r += 2
    dropped = []
    q = 0
    for k, pairs in enumerate(per_seller):
        if not pairs:
            continue
        zs = list(range(E + q, E + q + len(pairs)))
        q += len(pairs)
        if drop_degenerate and inst.threshold[k] >= len(pairs):
            dropped.append(k)
            continue
        lr += [r] * len(zs); lc += zs; lv += [1.0] * len(zs); lb.append(float(inst.threshold[k]))
        kinds.append(f"threshold seller {k + 1}")
        r += 1
    rows.append(np.asarray(lr, dtype=np.int64)); cols.append(np.asarray(lc, dtype=np.int64))
    vals.append(np.asarray(lv)); rhs.append(np.asarray(lb))
    A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r, nv))
    c = np.concatenate([inst.weight, np.zeros(Z)])
    return MilpProgram(c, A, np.concatenate(rhs), kinds, E, z_pairs, dropped)


def simplex_solve(program, lo=None, hi=None) -> LpResult:
    """LP relaxation of a ``MilpProgram`` (or ``crec.LpEncoding``) by the in-repo simplex."""
    if isinstance(program, MilpProgram):
        c, A, b = program.c, program.A, program.b
    else:
        c, A, b = program.W, program.A, program.D
    n = len(c)
    lo = np.zeros(n) if lo is None else lo
    hi = np.ones(n) if hi is None else hi
    return linprog_max(c, A, b, lo, hi)


def solve_lp_rounding(inst: Instance):
    """Solve the relaxation, then accept edges by decreasing fractional value while feasible."""
    t0 = time.perf_counter()
    prog = build_milp(inst)
    res = simplex_solve(prog)
    if not res.ok:
        raise LpError(f"LP relaxation ended with status {res.status}")
    x = res.x[:prog.num_x]
    nonzero = np.flatnonzero(x > INT_TOL)
    key = np.lexsort((inst.edge_seller[nonzero], inst.edge_buyer[nonzero],
                      -inst.weight[nonzero], -x[nonzero]))
    chosen = round_in_order(inst, nonzero[key].tolist())
    rec = Recommendation.from_edge_indices(inst, chosen)
    return rec, SolveReport("lp-round", rec.objective, time.perf_counter() - t0, feasible=True,
                            upper_bound=res.objective, iterations=res.iterations,
                            extra={"lp_objective": res.objective, "num_z": prog.num_z})


def _most_fractional(x, num_x):
    frac = np.abs(x[:num_x] - np.round(x[:num_x]))
    j = int(np.argmax(frac))
    return j if frac[j] > INT_TOL else -1


def _prune_tol(v):
    return OBJ_RTOL * (1.0 + abs(v))


def solve_ilp(inst: Instance, node_limit: int | None = None, time_limit: float | None = None):
    """Best-first branch-and-bound on the LP relaxation.

    Branches on the most fractional ``x``; ``z`` needs no branching because an
    integral ``x`` admits ``z = x_a AND x_b``.  Seeded with the greedy solution.
    """
    t0 = time.perf_counter()
    prog = build_milp(inst)
    lo0, hi0 = prog.bounds()
    inc_rec, _ = solve_greedy(inst)
    inc = inc_rec.objective
    counter = itertools.count()
    nodes = lp_iters = 0

    def relax(lo, hi):
        nonlocal nodes, lp_iters
        nodes += 1
        res = simplex_solve(prog, lo, hi)
        lp_iters += res.iterations
        return res

    root = relax(lo0, hi0)
    if not root.ok:
        raise LpError(f"root relaxation ended with status {root.status}")
    root_bound = root.objective
    heap = [(-root.objective, 0, next(counter), lo0, hi0, root.x)]
    limit_hit = False
    while heap:
        neg_bound, neg_depth, _, lo, hi, x = heap[0]
        if -neg_bound <= inc + _prune_tol(inc):
            break
        if (node_limit is not None and nodes >= node_limit) or \
                (time_limit is not None and time.perf_counter() - t0 > time_limit):
            limit_hit = True
            break
        heapq.heappop(heap)
        j = _most_fractional(x, prog.num_x)
        if j < 0:
            chosen = np.flatnonzero(x[:prog.num_x] > 0.5)
            cand = Recommendation.from_edge_indices(inst, chosen)
            if cand.objective > inc and check_feasible(inst, cand).ok:
                inc_rec, inc = cand, cand.objective
            continue
        for val in (1.0, 0.0):
            clo, chi = lo.copy(), hi.copy()
            clo[j] = chi[j] = val
            res = relax(clo, chi)
            if res.ok and res.objective > inc + _prune_tol(inc):
                heapq.heappush(heap, (-res.objective, neg_depth - 1, next(counter), clo, chi, res.x))
    open_bound = max((-h[0] for h in heap), default=inc)
    proven = not limit_hit
    upper = inc if proven else max(inc, open_bound)
    report = SolveReport("ilp", inc, time.perf_counter() - t0, feasible=True, upper_bound=upper,
                         optimal=proven, iterations=lp_iters, nodes=nodes,
                         extra={"root_bound": root_bound, "num_z": prog.num_z,
                                "limit_hit": limit_hit})
    return inc_rec, report
