"""Exact C-REC: maximum-weight degree-constrained bipartite subgraph.

The production path is a min-cost flow (source -> buyers -> sellers -> sink)
solved by successive shortest paths with node potentials.  Flow is pushed only
while the cheapest augmenting path still has negative cost, i.e. adds weight,
because unused capacity is allowed.  ``solve_crec_lp`` solves the same problem
as an LP with the in-repo simplex to confirm that its optimum is integral.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from decimal import Decimal

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra, maximum_flow

from .model import Instance, Recommendation, SolveReport, check_feasible
from .simplex import LpError, linprog_max

MAX_DECIMALS = 9


@dataclass
class FlowNetwork:
    """Residual network in flat arc arrays; arc ``a ^ 1`` is the reverse of ``a``."""

    num_nodes: int
    head: list
    cap: list
    cost: list
    adj: list  # per node, arc ids in insertion order
    edge_arc: list  # forward middle arc id for each instance edge

    @property
    def source(self):
        return 0

    @property
    def sink(self):
        return self.num_nodes - 1


def weight_scale(weights) -> int | None:
    """Smallest power of ten that makes every weight integral, or None if above 1e9."""
    p = 0
    for w in set(np.asarray(weights, dtype=np.float64).tolist()):
        exp = Decimal(repr(w)).normalize().as_tuple().exponent
        if isinstance(exp, str):  # nan / inf
            return None
        p = max(p, -exp)
        if p > MAX_DECIMALS:
            return None
    return p


def build_network(inst: Instance, costs=None) -> FlowNetwork:
    m, n = inst.m, inst.n
    N = m + n + 2
    head, cap, cost = [], [], []
    adj = [[] for _ in range(N)]

    def arc(u, v, c, w):
        adj[u].append(len(head))
        head.append(v); cap.append(c); cost.append(w)
        adj[v].append(len(head))
        head.append(u); cap.append(0); cost.append(-w)

    zero = 0
    for i in range(m):
        arc(0, 1 + i, int(inst.buyer_bound[i]), zero)
    if costs is None:
        costs = (-inst.weight).tolist()
    edge_arc = [0] * inst.num_edges
    order = np.lexsort((inst.edge_seller, inst.edge_buyer))
    eb, es = inst.edge_buyer.tolist(), inst.edge_seller.tolist()
    for e in order.tolist():
        edge_arc[e] = len(head)
        arc(1 + eb[e], 1 + m + es[e], 1, costs[e])
    for j in range(n):
        arc(1 + m + j, N - 1, int(inst.seller_bound[j]), zero)
    return FlowNetwork(N, head, cap, cost, adj, edge_arc)


def _initial_potentials(net: FlowNetwork, inf):
    # The residual graph starts as a DAG in layer order, so one sweep suffices.
    pot = [inf] * net.num_nodes
    pot[0] = 0
    for u in range(net.num_nodes):
        if pot[u] == inf:
            continue
        for a in net.adj[u]:
            if net.cap[a] > 0:
                v = net.head[a]
                if v > u and pot[u] + net.cost[a] < pot[v]:
                    pot[v] = pot[u] + net.cost[a]
    return pot


def min_cost_flow(net: FlowNetwork, integral: bool):
    """Augment along negative-cost shortest paths until none remains.

    Returns ``(total_cost, phases, augmentations)``.
    """
    inf = float("inf")
    eps = 0 if integral else 1e-12
    N, s, t = net.num_nodes, net.source, net.sink
    head, cap, cost, adj = net.head, net.cap, net.cost, net.adj
    pot = _initial_potentials(net, inf)
    reach = [p != inf for p in pot]
    pot = [p if p != inf else 0 for p in pot]
    total = 0
    phases = augments = 0
    while True:
        dist = [inf] * N
        dist[s] = 0
        prev = [-1] * N
        heap = [(0, s)]
        done = [False] * N
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            pu = pot[u]
            for a in adj[u]:
                if cap[a] <= 0:
                    continue
                v = head[a]
                if not reach[v] or done[v]:
                    continue
                rc = cost[a] + pu - pot[v]
                if rc < 0:
                    rc = 0  # float round-off only; exact potentials keep rc >= 0
                nd = d + rc
                if nd < dist[v]:
                    dist[v] = nd
                    prev[v] = a
                    heapq.heappush(heap, (nd, v))
        if dist[t] == inf:
            break
        for v in range(N):
            if done[v]:
                pot[v] += dist[v]
        path_cost = pot[t] - pot[s]
        if path_cost >= -eps:
            break
        phases += 1
        # Blocking flow over admissible (zero reduced cost) arcs.
        blocked = [not done[v] for v in range(N)]
        ptr = [0] * N
        found = 0
        while True:
            stack, arcs = [s], []
            on_stack = [False] * N
            on_stack[s] = True
            while stack and stack[-1] != t:
                u = stack[-1]
                advanced = False
                lst = adj[u]
                while ptr[u] < len(lst):
                    a = lst[ptr[u]]
                    v = head[a]
                    if cap[a] > 0 and not blocked[v] and not on_stack[v] \
                            and abs(cost[a] + pot[u] - pot[v]) <= eps:
                        stack.append(v)
                        arcs.append(a)
                        on_stack[v] = True
                        advanced = True
                        break
                    ptr[u] += 1
                if not advanced:
                    blocked[u] = True
                    on_stack[u] = False
                    stack.pop()
                    if arcs:
                        arcs.pop()
                        ptr[stack[-1]] += 1
            if not stack:
                break
            found += 1
            f = min(cap[a] for a in arcs)
            for a in arcs:
                cap[a] -= f
                cap[a ^ 1] += f
            total += f * path_cost
            augments += 1
        if not found:
            # DFS blocking can be fooled by zero-cost cycles; use the tree path.
            arcs, v = [], t
            while v != s:
                arcs.append(prev[v])
                v = head[prev[v] ^ 1]
            f = min(cap[a] for a in arcs)
            for a in arcs:
                cap[a] -= f
                cap[a ^ 1] += f
            total += f * path_cost
            augments += 1
    return total, phases, augments


def scaled_circulation(tail, head, cap, cost):
    """Min-cost circulation by cost scaling, with successive shortest paths inside each scale.

    Integer arrays describe forward arcs.  Costs are refined one bit at a time:
    doubling the previous potentials leaves every residual arc with reduced cost
    at least -1, those arcs are saturated, and the resulting excesses are routed
    to the deficits along shortest paths (Dijkstra on reduced costs, then a
    max-flow over the zero-reduced-cost arcs so all shortest paths of one length
    are used at once).  Returns ``(flow, scales, phases)``.
    """
    tail = np.asarray(tail, dtype=np.int64)
    head = np.asarray(head, dtype=np.int64)
    cost = np.asarray(cost, dtype=np.int64)
    A = len(tail)
    N = int(max(tail.max(initial=-1), head.max(initial=-1))) + 1
    T = np.concatenate([tail, head])
    H = np.concatenate([head, tail])
    K = np.concatenate([np.asarray(cap, dtype=np.int64), np.zeros(A, dtype=np.int64)])
    mate = np.concatenate([np.arange(A, 2 * A), np.arange(A)])
    pot = np.zeros(N, dtype=np.int64)
    top = int(np.abs(cost).max(initial=0)).bit_length()
    phases = 0
    for k in range(top, -1, -1):
        ck = cost >> k  # floor division keeps c_k = 2 c_(k+1) + bit
        C = np.concatenate([ck, -ck])
        pot *= 2
        rc = C + pot[T] - pot[H]
        neg = np.flatnonzero((K > 0) & (rc < 0))
        excess = np.zeros(N, dtype=np.int64)
        if len(neg):
            f = K[neg]
            np.add.at(excess, T[neg], -f)
            np.add.at(excess, H[neg], f)
            K[mate[neg]] += f
            K[neg] = 0
        while True:
            src = np.flatnonzero(excess > 0)
            if not len(src):
                break
            phases += 1
            live = K > 0
            rc = C + pot[T] - pot[H]
            G = sparse.csr_matrix((rc[live].astype(np.float64), (T[live], H[live])), shape=(N, N))
            dist = dijkstra(G, indices=src, min_only=True)
            sinks = np.flatnonzero(excess < 0)
            delta = dist[sinks].min()
            if not np.isfinite(delta):
                raise RuntimeError("excess cannot reach a deficit; capacities are inconsistent")
            pot += np.minimum(dist, delta).astype(np.int64)
            rc = C + pot[T] - pot[H]
            adm = np.flatnonzero(live & (rc == 0))
            S, Z = N, N + 1  # super source and super sink
            targets = sinks[dist[sinks] == delta]
            rows = np.concatenate([T[adm], np.full(len(src), S), targets])
            cols = np.concatenate([H[adm], src, np.full(len(targets), Z)])
            caps = np.concatenate([K[adm], excess[src], -excess[targets]])
            Gc = sparse.csr_matrix((caps.astype(np.int32), (rows, cols)), shape=(N + 2, N + 2))
            flow = maximum_flow(Gc, S, Z, method="dinic").flow.tocsr()
            f = np.maximum(np.asarray(flow[T[adm], H[adm]]).ravel(), 0).astype(np.int64)
            K[adm] -= f
            K[mate[adm]] += f
            excess[src] -= np.maximum(np.asarray(flow[np.full(len(src), S), src]).ravel(), 0).astype(np.int64)
            excess[targets] += np.maximum(np.asarray(flow[targets, np.full(len(targets), Z)]).ravel(),
                                          0).astype(np.int64)
    return K[A:].copy(), top + 1, phases


def _crec_arcs(inst: Instance, costs):
    m, n, E = inst.m, inst.n, inst.num_edges
    s, t = 0, m + n + 1
    tail = np.concatenate([np.zeros(m, np.int64), 1 + inst.edge_buyer, 1 + m + np.arange(n), [t]])
    head = np.concatenate([1 + np.arange(m), 1 + m + inst.edge_seller, np.full(n, t), [s]])
    back = min(int(inst.buyer_bound.sum()), int(inst.seller_bound.sum()), E)
    cap = np.concatenate([inst.buyer_bound, np.ones(E, np.int64), inst.seller_bound, [back]])
    cost = np.concatenate([np.zeros(m, np.int64), costs, np.zeros(n + 1, np.int64)])
    return tail, head, cap, cost


def solve_crec(inst: Instance, method: str = "auto"):
    """Maximum-weight selection under degree bounds; conflicts are ignored.

    ``method="scaling"`` (the default for weights with at most nine decimals)
    runs the cost-scaling circulation; ``"ssp"`` runs plain successive shortest
    paths on the residual network and also covers arbitrary float weights.
    """
    t0 = time.perf_counter()
    p = weight_scale(inst.weight)
    if method == "auto":
        method = "scaling" if p is not None else "ssp"
    if method not in ("scaling", "ssp"):
        raise ValueError(f"unknown C-REC method {method!r}")
    if method == "scaling" and p is None:
        raise ValueError("cost scaling needs weights with at most nine decimals")
    costs = None
    if p is not None:
        scale = 10 ** p
        costs = [-int(Decimal(repr(w)) * scale) for w in inst.weight.tolist()]
    if method == "scaling":
        flow, scales, phases = scaled_circulation(*_crec_arcs(inst, np.array(costs, dtype=np.int64)))
        chosen = np.flatnonzero(flow[inst.m:inst.m + inst.num_edges] > 0)
        augments = None
        extra = {"scales": scales, "phases": phases}
    else:
        net = build_network(inst, costs)
        _, phases, augments = min_cost_flow(net, p is not None)
        chosen = [e for e, a in enumerate(net.edge_arc) if net.cap[a] == 0]
        extra = {"phases": phases}
    rec = Recommendation.from_edge_indices(inst, chosen)
    extra.update(method=method, weight_decimals=p)
    report = SolveReport("crec-flow", rec.objective, time.perf_counter() - t0,
                         feasible=check_feasible(inst.without_conflicts(), rec).ok,
                         optimal=True, iterations=augments, extra=extra)
    return rec, report


@dataclass
class LpEncoding:
    """``max W.x  s.t.  A x <= D, 0 <= x <= 1`` with one column per existing edge."""

    A: sparse.csr_matrix  # (m + n) x |E|; buyer rows first
    D: np.ndarray
    W: np.ndarray
    edges: list  # column order as (buyer, seller)

    @property
    def shape(self):
        return self.A.shape


def incidence_matrix(inst: Instance) -> sparse.csr_matrix:
    E = inst.num_edges
    cols = np.arange(E)
    rows = np.concatenate([inst.edge_buyer, inst.m + inst.edge_seller])
    data = np.ones(2 * E)
    return sparse.csr_matrix((data, (rows, np.concatenate([cols, cols]))), shape=(inst.m + inst.n, E))


def build_lp(inst: Instance) -> LpEncoding:
    D = np.concatenate([inst.buyer_bound, inst.seller_bound]).astype(np.float64)
    return LpEncoding(incidence_matrix(inst), D, inst.weight.astype(np.float64), inst.edge_list())


def solve_crec_lp(inst: Instance):
    """LP relaxation of C-REC solved by simplex; returns ``(x, objective, result)``."""
    lp = build_lp(inst)
    E = inst.num_edges
    res = linprog_max(lp.W, lp.A, lp.D, np.zeros(E), np.ones(E))
    if not res.ok:
        raise LpError(f"C-REC LP ended with status {res.status}")
    return res.x, res.objective, res
