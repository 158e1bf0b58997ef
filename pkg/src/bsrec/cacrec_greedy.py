"""GREEDY for CAC-REC and its (2 + d) approximation certificate.

Edges are scanned by weight, heaviest first; ties go to the smaller
``(buyer, seller)`` pair.  An edge is kept when it breaks neither a degree
bound nor its seller's conflict threshold.  Nothing is ever removed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .model import FeasibilityTracker, Instance, Recommendation, SolveReport


@dataclass
class ConflictDegreeSummary:
    d: int
    per_buyer: np.ndarray
    histogram: dict

    @property
    def bound(self) -> int:
        return 2 + self.d


def conflict_degree(inst: Instance) -> ConflictDegreeSummary:
    """Largest number of conflict pairs touching a single buyer."""
    per_buyer = np.bincount(inst.conflicts.reshape(-1), minlength=inst.m) if len(inst.conflicts) \
        else np.zeros(inst.m, dtype=np.int64)
    values, counts = np.unique(per_buyer, return_counts=True)
    return ConflictDegreeSummary(int(per_buyer.max(initial=0)), per_buyer,
                                 dict(zip(values.tolist(), counts.tolist())))


def greedy_order(inst: Instance) -> np.ndarray:
    return np.lexsort((inst.edge_seller, inst.edge_buyer, -inst.weight))


def solve_greedy(inst: Instance):
    t0 = time.perf_counter()
    order = greedy_order(inst)
    tracker = FeasibilityTracker(inst)
    try_add = tracker.try_add
    # gathered in scan order so the loop walks memory sequentially
    keep = [try_add(b, s) for b, s in zip(inst.edge_buyer[order].tolist(), inst.edge_seller[order].tolist())]
    chosen = order[np.asarray(keep, dtype=bool)] if keep else order[:0]
    rec = Recommendation.from_edge_indices(inst, chosen)
    return rec, SolveReport("greedy", rec.objective, time.perf_counter() - t0, feasible=True,
                            iterations=len(order), extra={"selected": len(chosen)})


def is_maximal(inst: Instance, rec: Recommendation) -> bool:
    """True when no unselected edge can be added without breaking a constraint."""
    tracker = FeasibilityTracker(inst)
    for b, s in rec.selected.tolist():
        tracker.add(b, s)
    chosen = set(rec.pairs())
    return not any(tracker.can_add(b, s) for b, s in inst.edge_list() if (b, s) not in chosen)


@dataclass
class ApproximationCertificate:
    optimum: float
    greedy: float
    d: int
    ratio: float

    @property
    def bound(self):
        return 2 + self.d

    @property
    def holds(self) -> bool:
        return self.optimum <= self.bound * self.greedy + 1e-9 * (1 + abs(self.optimum))


def approximation_certificate(inst: Instance, rec: Recommendation, optimum: float) -> ApproximationCertificate:
    d = conflict_degree(inst).d
    ratio = optimum / rec.objective if rec.objective > 0 else (1.0 if optimum == 0 else float("inf"))
    cert = ApproximationCertificate(float(optimum), rec.objective, d, ratio)
    if not cert.holds:
        raise AssertionError(f"greedy ratio {ratio:.4g} exceeds 2 + d = {cert.bound}")
    return cert
