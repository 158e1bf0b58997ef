"""RMIS to CAC-REC: the reduction behind NP-hardness, made executable.

Jobs become buyers and machines become sellers.  A job may use one machine
(buyer bound 1), machines accept any number of jobs, and two jobs whose
intervals overlap may not share a machine (threshold 0).
"""
from __future__ import annotations

import itertools
import json
from pathlib import Path

from .model import Instance, Recommendation
from .oracle import RmisInstance, overlaps

RMIS_FORMAT_VERSION = 1


def rmis_to_cacrec(rmis: RmisInstance) -> Instance:
    problems = rmis.validate()
    if problems:
        raise ValueError("invalid RMIS instance: " + "; ".join(problems))
    J, M = rmis.jobs, rmis.machines
    edges = [(j, mach, rev) for j in range(J) for mach, rev in sorted(rmis.revenue[j].items())]
    conflicts = [(a, b) for a, b in itertools.combinations(range(J), 2)
                 if overlaps(rmis.intervals[a], rmis.intervals[b])]
    return Instance.from_edges(J, M, edges, buyer_bound=1, seller_bound=J,
                               conflicts=conflicts, threshold=0)


def cacrec_solution_to_schedule(rmis: RmisInstance, rec: Recommendation) -> list:
    """``schedule[j]`` is job j's machine, or None when unscheduled."""
    schedule = [None] * rmis.jobs
    for j, mach in rec.pairs():
        if schedule[j] is not None:
            raise ValueError(f"job {j + 1} assigned to two machines")
        schedule[j] = mach
    return schedule


def schedule_to_recommendation(rmis: RmisInstance, inst: Instance, schedule) -> Recommendation:
    chosen = [(j, mach) for j, mach in enumerate(schedule) if mach is not None]
    index = inst.edge_index()
    return Recommendation.from_edge_indices(inst, [index[p] for p in chosen])


# ---------------------------------------------------------------- files

def rmis_to_dict(rmis: RmisInstance) -> dict:
    jobs = []
    for j in range(rmis.jobs):
        s, e = rmis.intervals[j]
        jobs.append({"interval": [_num(s), _num(e)],
                     "revenue": {str(m + 1): _num(r) for m, r in sorted(rmis.revenue[j].items())}})
    return {"version": RMIS_FORMAT_VERSION, "machines": rmis.machines, "jobs": jobs}


def rmis_from_dict(d: dict) -> RmisInstance:
    if d.get("version", RMIS_FORMAT_VERSION) != RMIS_FORMAT_VERSION:
        raise ValueError(f"unsupported RMIS format version {d.get('version')}")
    try:
        revenue = [{int(k) - 1: v for k, v in job["revenue"].items()} for job in d["jobs"]]
        intervals = [tuple(job["interval"]) for job in d["jobs"]]
        rmis = RmisInstance(int(d["machines"]), revenue, intervals)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed RMIS document: {exc}") from exc
    problems = rmis.validate()
    if problems:
        raise ValueError("invalid RMIS instance: " + "; ".join(problems))
    return rmis


def read_rmis(path) -> RmisInstance:
    return rmis_from_dict(json.loads(Path(path).read_text()))


def write_rmis(rmis: RmisInstance, path) -> None:
    Path(path).write_text(json.dumps(rmis_to_dict(rmis), indent=1) + "\n")


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() else x
