"""Exhaustive reference solvers for tiny instances.

Used only as ground truth in tests and for ``solve --method oracle``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .model import Instance, Recommendation, conflict_adjacency

MAX_EDGES = 20
MAX_JOBS = 10
MAX_MACHINES = 5


class OracleLimitError(ValueError):
    pass


def _sorted_edges(inst: Instance) -> np.ndarray:
    return np.lexsort((inst.edge_seller, inst.edge_buyer))


def _tol(x):
    return 1e-9 * (1.0 + abs(x))


def _search(inst: Instance, with_conflicts: bool):
    E = inst.num_edges
    if E > MAX_EDGES:
        raise OracleLimitError(f"oracle limited to {MAX_EDGES} edges, got {E}")
    order = _sorted_edges(inst).tolist()
    eb = inst.edge_buyer[order].tolist()
    es = inst.edge_seller[order].tolist()
    w = inst.weight[order].tolist()
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]]).tolist()
    bcap, scap, tcap = inst.buyer_bound.tolist(), inst.seller_bound.tolist(), inst.threshold.tolist()
    adj = conflict_adjacency(inst) if with_conflicts else [set() for _ in range(inst.m)]
    bdeg, sdeg = [0] * inst.m, [0] * inst.n
    at_seller = [set() for _ in range(inst.n)]
    conf = [0] * inst.n
    best = [-1.0, []]
    chosen = []

    def dfs(k, value):
        if value + suffix[k] <= best[0] + _tol(best[0]):
            return
        if k == E:
            best[0], best[1] = value, list(chosen)
            return
        b, s = eb[k], es[k]
        if bdeg[b] < bcap[b] and sdeg[s] < scap[s]:
            extra = len(adj[b] & at_seller[s])
            if conf[s] + extra <= tcap[s]:
                bdeg[b] += 1; sdeg[s] += 1; conf[s] += extra
                at_seller[s].add(b)
                chosen.append(order[k])
                dfs(k + 1, value + w[k])
                chosen.pop()
                at_seller[s].discard(b)
                bdeg[b] -= 1; sdeg[s] -= 1; conf[s] -= extra
        dfs(k + 1, value)

    dfs(0, 0.0)
    rec = Recommendation.from_edge_indices(inst, best[1])
    return rec, rec.objective


def brute_force_crec(inst: Instance):
    """Best degree-feasible edge subset, ignoring conflicts."""
    return _search(inst, with_conflicts=False)


def brute_force_cacrec(inst: Instance):
    """Best subset satisfying degree bounds and per-seller conflict thresholds.

    Among optimal subsets the one met first by an include-before-exclude search
    over edges in ``(buyer, seller)`` order is returned.
    """
    return _search(inst, with_conflicts=True)


def enumerate_unpruned(inst: Instance, with_conflicts: bool = True):
    """Plain 2^|E| enumeration (vectorized); same tie rule as the pruned search."""
    E = inst.num_edges
    if E > 16:
        raise OracleLimitError("unpruned enumeration limited to 16 edges")
    order = _sorted_edges(inst)
    masks = np.arange(2 ** E, dtype=np.int64)
    # bit E-1-k of the mask is sorted edge k, so larger masks come first in include-first order
    X = ((masks[:, None] >> (E - 1 - np.arange(E))[None, :]) & 1).astype(bool)
    eb, es, w = inst.edge_buyer[order], inst.edge_seller[order], inst.weight[order]
    value = X.astype(np.float64) @ w
    ok = np.ones(len(masks), dtype=bool)
    for i in range(inst.m):
        ok &= X[:, eb == i].sum(axis=1) <= inst.buyer_bound[i]
    for j in range(inst.n):
        ok &= X[:, es == j].sum(axis=1) <= inst.seller_bound[j]
    if with_conflicts and len(inst.conflicts):
        pos = {(b, s): k for k, (b, s) in enumerate(zip(eb.tolist(), es.tolist()))}
        for j in range(inst.n):
            count = np.zeros(len(masks), dtype=np.int64)
            for a, b in inst.conflicts.tolist():
                if (a, j) in pos and (b, j) in pos:
                    count += X[:, pos[(a, j)]] & X[:, pos[(b, j)]]
            ok &= count <= inst.threshold[j]
    feasible = np.flatnonzero(ok)
    vals = value[feasible]
    top = vals.max()
    ties = feasible[vals >= top - _tol(top)]
    pick = ties.max()
    rec = Recommendation.from_edge_indices(inst, order[X[pick]].tolist())
    return rec, rec.objective


# ------------------------------------------------------------------ RMIS


@dataclass
class RmisInstance:
    """Revenue maximization in interval scheduling.

    ``revenue[j]`` maps each eligible machine of job ``j`` to its revenue, so the
    eligible set is its key set.  ``intervals[j] = (start, end)`` is half-open.
    """

    machines: int
    revenue: list
    intervals: list = field(default_factory=list)

    def __post_init__(self):
        self.revenue = [{int(k): float(v) for k, v in r.items()} for r in self.revenue]
        self.intervals = [(float(a), float(b)) for a, b in self.intervals]

    @property
    def jobs(self) -> int:
        return len(self.revenue)

    def eligible(self, j):
        return sorted(self.revenue[j])

    def validate(self) -> list[str]:
        out = []
        if self.machines <= 0:
            out.append("need at least one machine")
        if len(self.intervals) != len(self.revenue):
            out.append("one interval per job required")
        for j, (a, b) in enumerate(self.intervals):
            if not a < b:
                out.append(f"job {j + 1}: interval start must precede end")
        for j, r in enumerate(self.revenue):
            for mach, val in r.items():
                if not 0 <= mach < self.machines:
                    out.append(f"job {j + 1}: machine {mach + 1} out of range")
                if val < 0:
                    out.append(f"job {j + 1}: negative revenue")
        return out


def overlaps(i1, i2) -> bool:
    """Half-open intervals ``[a, b)`` intersect."""
    return i1[0] < i2[1] and i2[0] < i1[1]


def schedule_feasible(rmis: RmisInstance, schedule) -> bool:
    for j, mach in enumerate(schedule):
        if mach is not None and mach not in rmis.revenue[j]:
            return False
    for j, k in itertools.combinations(range(rmis.jobs), 2):
        if schedule[j] is not None and schedule[j] == schedule[k] \
                and overlaps(rmis.intervals[j], rmis.intervals[k]):
            return False
    return True


def schedule_revenue(rmis: RmisInstance, schedule) -> float:
    return sum(rmis.revenue[j][mach] for j, mach in enumerate(schedule) if mach is not None)


def brute_force_rmis(rmis: RmisInstance):
    """Enumerate every assignment of jobs to ``{unscheduled} | S(j)``."""
    if rmis.jobs > MAX_JOBS or rmis.machines > MAX_MACHINES:
        raise OracleLimitError(f"RMIS oracle limited to {MAX_JOBS} jobs and {MAX_MACHINES} machines")
    J = rmis.jobs
    on_machine = [[] for _ in range(rmis.machines)]
    current = [None] * J
    best = [-1.0, [None] * J]

    def dfs(j, value):
        if j == J:
            if value > best[0]:
                best[0], best[1] = value, list(current)
            return
        for mach in rmis.eligible(j):
            iv = rmis.intervals[j]
            if all(not overlaps(iv, rmis.intervals[k]) for k in on_machine[mach]):
                on_machine[mach].append(j)
                current[j] = mach
                dfs(j + 1, value + rmis.revenue[j][mach])
                current[j] = None
                on_machine[mach].pop()
        dfs(j + 1, value)

    dfs(0, 0.0)
    return best[1], best[0]


def random_rmis(rng, max_jobs=8, max_machines=4, horizon=10, revenue_max=10) -> RmisInstance:
    J = int(rng.integers(1, max_jobs + 1))
    M = int(rng.integers(1, max_machines + 1))
    revenue, intervals = [], []
    for _ in range(J):
        k = int(rng.integers(0, M + 1))
        machines = rng.choice(M, size=k, replace=False).tolist() if k else []
        revenue.append({mach: int(rng.integers(0, revenue_max + 1)) for mach in machines})
        a = int(rng.integers(0, horizon))
        intervals.append((a, a + int(rng.integers(1, 4))))
    return RmisInstance(M, revenue, intervals)


# ------------------------------------------------------------------ LP


def lp_vertex_oracle(c, A, b, lo, hi, tol=1e-9):
    """Optimum of ``max c.x, A x <= b, lo <= x <= hi`` by enumerating basic points.

    Every vertex is the solution of ``n`` linearly independent active constraints;
    bounded boxes guarantee an optimal vertex exists when the LP is feasible.
    Returns ``(x, objective)`` or ``(None, None)`` when infeasible.
    """
    c = np.asarray(c, float)
    n = len(c)
    A = np.asarray(A, float).reshape(-1, n)
    b = np.asarray(b, float)
    rows = [A, -np.eye(n), np.eye(n)]
    rhs = [b, -np.asarray(lo, float), np.asarray(hi, float)]
    G = np.concatenate(rows)
    h = np.concatenate(rhs)
    best_x, best = None, None
    for active in itertools.combinations(range(len(G)), n):
        M = G[list(active)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(active)])
        if np.all(G @ x <= h + 1e-7):
            v = float(c @ x)
            if best is None or v > best + tol:
                best_x, best = x, v
    return best_x, best
