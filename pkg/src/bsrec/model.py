"""Instances, recommendations and feasibility checks for buyer-to-seller recommendation.

Buyers and sellers are 0-based internally and 1-based in files.  An instance is
held as flat numpy arrays (one entry per edge, one row per conflict pair) so the
same type serves 4-edge test fixtures and 700k-edge scaling runs.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Raised when a file cannot be turned into a valid instance or solution."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """A C-REC / CAC-REC problem.

    ``edge_buyer[e]``, ``edge_seller[e]`` and ``weight[e]`` describe edge ``e``.
    ``conflicts`` is a ``(K, 2)`` array of buyer pairs stored as ``(min, max)``.
    An instance without conflicts is a plain C-REC instance.
    """

    m: int
    n: int
    edge_buyer: np.ndarray
    edge_seller: np.ndarray
    weight: np.ndarray
    buyer_bound: np.ndarray
    seller_bound: np.ndarray
    conflicts: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    threshold: np.ndarray | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "edge_buyer", _frozen(self.edge_buyer, np.int64).reshape(-1))
        set_(self, "edge_seller", _frozen(self.edge_seller, np.int64).reshape(-1))
        set_(self, "weight", _frozen(self.weight, np.float64).reshape(-1))
        set_(self, "buyer_bound", _frozen(self.buyer_bound, np.int64).reshape(-1))
        set_(self, "seller_bound", _frozen(self.seller_bound, np.int64).reshape(-1))
        c = np.array(self.conflicts, dtype=np.int64).reshape(-1, 2)
        c = np.sort(c, axis=1) if len(c) else c
        c.setflags(write=False)
        set_(self, "conflicts", c)
        if self.threshold is None:
            t = np.zeros(self.n, dtype=np.int64)
        elif np.ndim(self.threshold) == 0:
            t = np.full(self.n, int(self.threshold), dtype=np.int64)
        else:
            t = self.threshold
        set_(self, "threshold", _frozen(t, np.int64).reshape(-1))
        if not (len(self.edge_buyer) == len(self.edge_seller) == len(self.weight)):
            raise InstanceError("edge arrays must have equal length")

    @classmethod
    def from_edges(cls, m, n, edges, buyer_bound, seller_bound, conflicts=(), threshold=0):
        """Build from ``[(i, j, w), ...]`` (0-based); scalar bounds are broadcast."""
        edges = list(edges)
        eb = [e[0] for e in edges]
        es = [e[1] for e in edges]
        w = [e[2] for e in edges]
        bb = np.broadcast_to(np.asarray(buyer_bound, dtype=np.int64), (m,))
        sb = np.broadcast_to(np.asarray(seller_bound, dtype=np.int64), (n,))
        return cls(m, n, eb, es, w, bb, sb, np.asarray(list(conflicts), dtype=np.int64).reshape(-1, 2), threshold)

    @property
    def num_edges(self) -> int:
        return len(self.weight)

    def edge_list(self):
        return list(zip(self.edge_buyer.tolist(), self.edge_seller.tolist()))

    def edge_index(self) -> dict:
        """Map ``(buyer, seller)`` to edge position."""
        return {e: k for k, e in enumerate(self.edge_list())}

    def replace(self, **changes) -> "Instance":
        kw = dict(m=self.m, n=self.n, edge_buyer=self.edge_buyer, edge_seller=self.edge_seller,
                  weight=self.weight, buyer_bound=self.buyer_bound, seller_bound=self.seller_bound,
                  conflicts=self.conflicts, threshold=self.threshold)
        kw.update(changes)
        return Instance(**kw)

    def without_conflicts(self) -> "Instance":
        return self.replace(conflicts=np.zeros((0, 2), dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.m == other.m and self.n == other.n
                and all(np.array_equal(getattr(self, a), getattr(other, a))
                        for a in ("edge_buyer", "edge_seller", "weight", "buyer_bound",
                                  "seller_bound", "conflicts", "threshold")))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Recommendation:
    """A selected edge set, stored as sorted 0-based ``(buyer, seller)`` rows."""

    selected: np.ndarray
    objective: float

    def __post_init__(self):
        s = np.array(self.selected, dtype=np.int64).reshape(-1, 2)
        if len(s):
            s = s[np.lexsort((s[:, 1], s[:, 0]))]
        s.setflags(write=False)
        object.__setattr__(self, "selected", s)
        object.__setattr__(self, "objective", float(self.objective))

    @classmethod
    def from_edge_indices(cls, inst: Instance, idx) -> "Recommendation":
        idx = np.asarray(sorted(int(k) for k in idx), dtype=np.int64)
        sel = np.stack([inst.edge_buyer[idx], inst.edge_seller[idx]], axis=1) if len(idx) else np.zeros((0, 2))
        return cls(sel, math.fsum(inst.weight[idx].tolist()))

    @classmethod
    def empty(cls) -> "Recommendation":
        return cls(np.zeros((0, 2), dtype=np.int64), 0.0)

    def __len__(self):
        return len(self.selected)

    def pairs(self):
        return [tuple(p) for p in self.selected.tolist()]

    def edge_indices(self, inst: Instance) -> np.ndarray:
        """Positions of the selected edges in ``inst``; raises if one is not an edge."""
        index = inst.edge_index()
        try:
            return np.array(sorted(index[p] for p in self.pairs()), dtype=np.int64)
        except KeyError as exc:
            raise InstanceError(f"selected pair {exc.args[0]} is not an edge") from None

    def __eq__(self, other):
        if not isinstance(other, Recommendation):
            return NotImplemented
        return np.array_equal(self.selected, other.selected) and self.objective == other.objective

    __hash__ = None


@dataclass
class SolveReport:
    method: str
    objective: float
    elapsed_s: float = 0.0
    feasible: bool = True
    upper_bound: float | None = None
    optimal: bool | None = None
    iterations: int = 0
    nodes: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float | None:
        if self.upper_bound is None:
            return None
        return max(0.0, self.upper_bound - self.objective)

    def as_dict(self) -> dict:
        d = {"method": self.method, "objective": self.objective, "elapsed_s": self.elapsed_s,
             "feasible": self.feasible, "upper_bound": self.upper_bound, "optimal": self.optimal,
             "iterations": self.iterations, "nodes": self.nodes, "gap": self.gap}
        d.update(self.extra)
        return d


@dataclass
class Verdict:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(inst: Instance) -> list[str]:
    """Return human-readable invariant violations; empty when the instance is well formed."""
    out = []
    if inst.m <= 0:
        out.append("m must be positive")
    if inst.n <= 0:
        out.append("n must be positive")
    eb, es = inst.edge_buyer, inst.edge_seller
    for k in np.flatnonzero((eb < 0) | (eb >= inst.m))[:20]:
        out.append(f"edge buyer index out of range: edge {k} buyer {eb[k] + 1}")
    for k in np.flatnonzero((es < 0) | (es >= inst.n))[:20]:
        out.append(f"edge seller index out of range: edge {k} seller {es[k] + 1}")
    if len(eb):
        key = eb * max(inst.n, 1) + es
        _, first, counts = np.unique(key, return_index=True, return_counts=True)
        for k in first[counts > 1][:20]:
            out.append(f"duplicate edge ({eb[k] + 1}, {es[k] + 1})")
    w = inst.weight
    for k in np.flatnonzero(~np.isfinite(w) | (w < 0))[:20]:
        out.append(f"negative or non-finite weight on edge ({eb[k] + 1}, {es[k] + 1})")
    if len(inst.buyer_bound) != inst.m:
        out.append("buyer degree bounds must have length m")
    if len(inst.seller_bound) != inst.n:
        out.append("seller degree bounds must have length n")
    for k in np.flatnonzero(inst.buyer_bound < 0)[:20]:
        out.append(f"negative degree bound at buyer {k + 1}")
    for k in np.flatnonzero(inst.seller_bound < 0)[:20]:
        out.append(f"negative degree bound at seller {k + 1}")
    if len(inst.threshold) != inst.n:
        out.append("conflict thresholds must have length n")
    for k in np.flatnonzero(inst.threshold < 0)[:20]:
        out.append(f"negative conflict threshold at seller {k + 1}")
    c = inst.conflicts
    if len(c):
        for a, b in c[c[:, 0] == c[:, 1]][:20].tolist():
            out.append(f"self-conflict at buyer {a + 1}")
        bad = (c < 0) | (c >= inst.m)
        for a, b in c[bad.any(axis=1)][:20].tolist():
            out.append(f"conflict buyer index out of range: ({a + 1}, {b + 1})")
        key = c[:, 0] * max(inst.m, 1) + c[:, 1]
        _, first, counts = np.unique(key, return_index=True, return_counts=True)
        for k in first[counts > 1][:20]:
            out.append(f"duplicate conflict ({c[k, 0] + 1}, {c[k, 1] + 1})")
    return out


def conflict_adjacency(inst: Instance) -> list[set]:
    """Per-buyer set of conflicting buyers."""
    adj = [set() for _ in range(inst.m)]
    for a, b in inst.conflicts.tolist():
        adj[a].add(b)
        adj[b].add(a)
    return adj


def seller_conflict_sets(inst: Instance) -> list[list[tuple[int, int]]]:
    """``C_k``: conflict pairs whose buyers are both adjacent to seller ``k``."""
    nbrs = [set() for _ in range(inst.n)]
    for b, s in zip(inst.edge_buyer.tolist(), inst.edge_seller.tolist()):
        nbrs[s].add(b)
    # Index conflicts by buyer so each seller only scans pairs touching its neighbourhood.
    by_buyer = defaultdict(list)
    for a, b in inst.conflicts.tolist():
        by_buyer[a].append(b)
    out = []
    for k in range(inst.n):
        nb = nbrs[k]
        out.append(sorted((a, b) for a in nb for b in by_buyer.get(a, ()) if b in nb))
    return out


def _selected_mask(inst: Instance, rec: Recommendation) -> np.ndarray:
    mask = np.zeros(inst.num_edges, dtype=bool)
    mask[rec.edge_indices(inst)] = True
    return mask


def conflict_pairs_at_seller(inst: Instance, rec: Recommendation, k: int) -> int:
    """Number of conflict pairs both of whose buyers are recommended to seller ``k``."""
    if not 0 <= k < inst.n:
        raise IndexError(f"seller index {k} out of range")
    buyers = set(rec.selected[rec.selected[:, 1] == k, 0].tolist())
    return int(sum(1 for a, b in inst.conflicts.tolist() if a in buyers and b in buyers))


def check_feasible(inst: Instance, rec: Recommendation) -> Verdict:
    """Check degree bounds at every node and conflict thresholds at every seller."""
    try:
        rec.edge_indices(inst)
    except InstanceError as exc:
        return Verdict([str(exc)])
    sel = rec.selected
    if len(np.unique(sel[:, 0] * inst.n + sel[:, 1])) != len(sel):
        return Verdict(["duplicate selected edge"])
    out = []
    bdeg = np.bincount(sel[:, 0], minlength=inst.m) if len(sel) else np.zeros(inst.m, dtype=np.int64)
    sdeg = np.bincount(sel[:, 1], minlength=inst.n) if len(sel) else np.zeros(inst.n, dtype=np.int64)
    for i in np.flatnonzero(bdeg > inst.buyer_bound):
        out.append(f"degree violation at buyer {i + 1}: {bdeg[i]} > {inst.buyer_bound[i]}")
    for j in np.flatnonzero(sdeg > inst.seller_bound):
        out.append(f"degree violation at seller {j + 1}: {sdeg[j]} > {inst.seller_bound[j]}")
    if len(inst.conflicts) and len(sel):
        adj = conflict_adjacency(inst)
        per_seller = defaultdict(set)
        for b, s in sel.tolist():
            per_seller[s].add(b)
        for s in sorted(per_seller):
            buyers = per_seller[s]
            count = sum(len(adj[b] & buyers) for b in buyers) // 2
            if count > inst.threshold[s]:
                out.append(f"conflict violation at seller {s + 1}: {count} > {inst.threshold[s]}")
    return Verdict(out)


class FeasibilityTracker:
    """Incremental degree/conflict state used by the greedy and rounding procedures.

    Adding edge ``(b, k)`` costs one set intersection between b's conflict
    neighbours and the buyers already recommended to ``k``.
    """

    def __init__(self, inst: Instance, adjacency: list[set] | None = None):
        self.inst = inst
        self.adj = adjacency if adjacency is not None else conflict_adjacency(inst)
        self.bdeg = [0] * inst.m
        self.sdeg = [0] * inst.n
        self.bcap = inst.buyer_bound.tolist()
        self.scap = inst.seller_bound.tolist()
        self.tcap = inst.threshold.tolist()
        self.at_seller = [set() for _ in range(inst.n)]
        self.conflicts = [0] * inst.n

    def added_conflicts(self, b: int, k: int) -> int:
        nb = self.adj[b]
        if not nb:
            return 0
        sel = self.at_seller[k]
        return len(nb & sel) if len(nb) < 4 * len(sel) + 8 else sum(1 for x in sel if x in nb)

    def can_add(self, b: int, k: int) -> bool:
        if self.bdeg[b] >= self.bcap[b] or self.sdeg[k] >= self.scap[k]:
            return False
        return self.conflicts[k] + self.added_conflicts(b, k) <= self.tcap[k]

    def add(self, b: int, k: int):
        self.conflicts[k] += self.added_conflicts(b, k)
        self.bdeg[b] += 1
        self.sdeg[k] += 1
        self.at_seller[k].add(b)

    def try_add(self, b: int, k: int) -> bool:
        if self.bdeg[b] >= self.bcap[b] or self.sdeg[k] >= self.scap[k]:
            return False
        c = self.added_conflicts(b, k)
        if self.conflicts[k] + c > self.tcap[k]:
            return False
        self.conflicts[k] += c
        self.bdeg[b] += 1
        self.sdeg[k] += 1
        self.at_seller[k].add(b)
        return True


def round_in_order(inst: Instance, order) -> list[int]:
    """Accept edges in ``order`` whenever the partial selection stays feasible."""
    tracker = FeasibilityTracker(inst)
    eb = inst.edge_buyer.tolist()
    es = inst.edge_seller.tolist()
    chosen = []
    for e in order:
        if tracker.try_add(eb[e], es[e]):
            chosen.append(int(e))
    return chosen


# ---------------------------------------------------------------- file formats

def _num(x: float):
    """Integral floats are written without a fractional part."""
    return int(x) if float(x).is_integer() and abs(x) < 2 ** 53 else float(x)


def instance_to_dict(inst: Instance) -> dict:
    return {
        "version": FORMAT_VERSION,
        "m": inst.m,
        "n": inst.n,
        "edges": [[b + 1, s + 1, _num(w)] for b, s, w in
                  zip(inst.edge_buyer.tolist(), inst.edge_seller.tolist(), inst.weight.tolist())],
        "degree_bounds": {"buyers": inst.buyer_bound.tolist(), "sellers": inst.seller_bound.tolist()},
        "conflicts": [[a + 1, b + 1] for a, b in inst.conflicts.tolist()],
        "conflict_thresholds": inst.threshold.tolist(),
    }


def _require(doc, key):
    if key not in doc:
        raise InstanceError(f"missing field '{key}'")
    return doc[key]


def instance_from_dict(doc: dict, check: bool = True) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be an object")
    version = _require(doc, "version")
    if version != FORMAT_VERSION:
        raise InstanceError(f"unsupported instance version {version!r}")
    try:
        m, n = int(_require(doc, "m")), int(_require(doc, "n"))
        edges = _require(doc, "edges")
        bounds = _require(doc, "degree_bounds")
        eb = np.array([int(e[0]) - 1 for e in edges], dtype=np.int64)
        es = np.array([int(e[1]) - 1 for e in edges], dtype=np.int64)
        w = np.array([float(e[2]) for e in edges], dtype=np.float64)
        conflicts = np.array([[int(c[0]) - 1, int(c[1]) - 1] for c in doc.get("conflicts", [])],
                             dtype=np.int64).reshape(-1, 2)
        thr = doc.get("conflict_thresholds", [0] * n)
        inst = Instance(m, n, eb, es, w, _require(bounds, "buyers"), _require(bounds, "sellers"),
                        conflicts, np.asarray(thr, dtype=np.int64))
    except (TypeError, IndexError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"malformed instance: {exc}") from None
    if check:
        problems = validate(inst)
        if problems:
            raise InstanceError("; ".join(problems))
    return inst


def write_instance(inst: Instance, path):
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=None, separators=(",", ":")) + "\n")


def read_instance(path, check: bool = True) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed file {path}: {exc}") from None
    return instance_from_dict(doc, check=check)


def read_edges_csv(edges_path, conflicts_path=None, *, buyer_bound, seller_bound, threshold=0,
                   m=None, n=None) -> Instance:
    """Import ``buyer,seller,weight`` rows (1-based) and optional ``buyer,buyer`` conflict rows."""
    import csv

    def rows(path):
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    int(row[0])
                except ValueError:
                    continue  # header
                yield row

    edges = [(int(r[0]) - 1, int(r[1]) - 1, float(r[2])) for r in rows(edges_path)]
    conflicts = [(int(r[0]) - 1, int(r[1]) - 1) for r in rows(conflicts_path)] if conflicts_path else []
    m = m or max([e[0] for e in edges] + [c for p in conflicts for c in p] + [-1]) + 1
    n = n or max([e[1] for e in edges] + [-1]) + 1
    inst = Instance.from_edges(m, n, edges, buyer_bound, seller_bound, conflicts, threshold)
    problems = validate(inst)
    if problems:
        raise InstanceError("; ".join(problems))
    return inst


def solution_to_dict(rec: Recommendation, method: str, elapsed_s: float | None = None,
                     upper_bound: float | None = None) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "method": method,
        "selected": [[b + 1, s + 1] for b, s in rec.selected.tolist()],
        "objective": _num(rec.objective),
    }
    if elapsed_s is not None:
        doc["elapsed_s"] = elapsed_s
    if upper_bound is not None:
        doc["upper_bound"] = _num(upper_bound)
    return doc


def write_solution(rec: Recommendation, path, method: str, elapsed_s=None, upper_bound=None):
    """Write a solution document.  ``elapsed_s`` is omitted unless given so reruns are byte-identical."""
    doc = solution_to_dict(rec, method, elapsed_s, upper_bound)
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def read_solution(path) -> tuple[Recommendation, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError("solution document must be an object")
    if doc.get("version") != FORMAT_VERSION:
        raise InstanceError(f"unsupported solution version {doc.get('version')!r}")
    try:
        sel = np.array([[int(p[0]) - 1, int(p[1]) - 1] for p in _require(doc, "selected")],
                       dtype=np.int64).reshape(-1, 2)
        rec = Recommendation(sel, float(_require(doc, "objective")))
    except (TypeError, IndexError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"malformed solution: {exc}") from None
    meta = {k: v for k, v in doc.items() if k not in ("selected", "objective")}
    return rec, meta


def check_solution(inst: Instance, rec: Recommendation, rtol: float = 1e-9) -> list[str]:
    """Feasibility plus agreement of the stored objective with the recomputed weight sum."""
    verdict = check_feasible(inst, rec)
    if not verdict.ok:
        return verdict.violations
    idx = rec.edge_indices(inst)
    actual = math.fsum(inst.weight[idx].tolist())
    if abs(actual - rec.objective) > rtol * max(1.0, abs(actual)):
        return [f"objective {rec.objective} does not match weight sum {actual}"]
    return []
