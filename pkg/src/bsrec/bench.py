"""Experiment harness: instance families, solver runs, CSV tables.

Three experiments mirror the evaluation study:

* ``crec-scaling``: C-REC runtime against density, degree ratio and edge subset.
* ``cacrec-quality``: optimum vs. SDP, LP and greedy on a 26 x 5 subgraph,
  plus an ILP arm on a larger sparse graph without the SDP.
* ``greedy-scaling``: greedy runtime as the edge count doubles.

Every row is re-checked for feasibility before it is written.  Trend checks
only warn; wall-clock numbers are reported, never asserted.
"""
from __future__ import annotations

import csv
import gc
import statistics
import time
import warnings
from pathlib import Path

import numpy as np

from .cacrec_greedy import conflict_degree, solve_greedy
from .cacrec_milp import solve_ilp, solve_lp_rounding
from .cacrec_sdp import solve_sdp_rounding
from .crec import solve_crec
from .genlab import FULL_M, FULL_N, GenConfig, generate, full_config, small_regime_config
from .model import check_feasible
from .oracle import MAX_EDGES, brute_force_cacrec

CREC_DENSITIES = (0.005, 0.01, 0.015, 0.02)
CREC_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5)
EDGE_FRACTIONS = (0.25, 0.5, 0.75)
CONFLICT_RATIOS = (0.05, 0.1, 0.15, 0.2)
DEGREE_RATIOS = (0.2, 0.3, 0.4, 0.5, 0.6)
WEIGHT_MODES = ("money", "rank")
GREEDY_FRACTIONS = (0.125, 0.25, 0.5, 1.0)

CREC_COLUMNS = ["density", "ratio", "fraction", "edges", "runtime_s", "objective"]
QUALITY_COLUMNS = ["arm", "weight_mode", "degree_ratio", "conflict_ratio", "edges", "conflicts", "d",
                   "optimum", "optimum_method", "optimal", "sdp_round", "sdp_bound", "lp_round",
                   "lp_bound", "greedy", "sdp_ratio", "lp_ratio", "greedy_ratio", "greedy_bound_ok"]
GREEDY_COLUMNS = ["fraction", "edges", "conflicts", "runtime_s", "runtime_median_s", "runtime_max_s",
                  "objective", "doubling_ratio"]


class BenchError(RuntimeError):
    """An emitted solution failed the feasibility re-check."""


def _verify(inst, rec, what):
    verdict = check_feasible(inst, rec)
    if not verdict.ok:
        raise BenchError(f"{what}: infeasible solution ({verdict.violations[0]})")


def write_csv(rows, columns, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 9))
    return "" if v is None else v


def _ratio(a, b):
    return a / b if b else 1.0


# ---------------------------------------------------------------- C-REC


def run_crec_scaling(densities=CREC_DENSITIES, ratios=CREC_RATIOS, fractions=EDGE_FRACTIONS, seed=0,
                     runs=5, m=FULL_M, n=FULL_N, out=None, progress=None):
    """Mean flow runtime per (density, ratio, fraction) over ``runs`` repetitions."""
    rows = []
    for density in densities:
        for ratio in ratios:
            for frac in fractions:
                inst = generate(full_config(density, m=m, n=n, degree_ratio=ratio, seed=seed,
                                             edge_fraction=frac))
                times, obj = [], None
                for _ in range(runs):
                    rec, rep = solve_crec(inst)
                    times.append(rep.elapsed_s)
                    if obj is not None and rec.objective != obj:
                        raise BenchError("C-REC objective changed between runs")
                    obj = rec.objective
                _verify(inst.without_conflicts(), rec, "crec-flow")
                rows.append({"density": density, "ratio": ratio, "fraction": frac,
                             "edges": inst.num_edges, "runtime_s": statistics.fmean(times),
                             "objective": obj})
                if progress:
                    progress(rows[-1])
    _check_density_trend(rows)
    if out is not None:
        write_csv(rows, CREC_COLUMNS, out)
    return rows


def _check_density_trend(rows):
    """Denser graphs should take longer at a fixed ratio and subset; warn when most cells disagree."""
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r["ratio"], r["fraction"]), []).append((r["density"], r["runtime_s"]))
    agree = total = 0
    for series in by_cell.values():
        series.sort()
        for (_, t1), (_, t2) in zip(series, series[1:]):
            total += 1
            agree += t2 >= t1
    if total and agree < 0.75 * total:
        warnings.warn(f"runtime rose with density in only {agree}/{total} steps", RuntimeWarning,
                      stacklevel=3)
    return agree, total


# ---------------------------------------------------------------- CAC-REC quality


def _quality_row(arm, inst, cfg, *, with_sdp, restarts, seed, ilp_time_limit, sdp_tol):
    d = conflict_degree(inst).d
    g, _ = solve_greedy(inst)
    _verify(inst, g, "greedy")
    lr, lrep = solve_lp_rounding(inst)
    _verify(inst, lr, "lp-round")
    if inst.num_edges <= MAX_EDGES:
        opt_rec, opt = brute_force_cacrec(inst)
        method, optimal = "oracle", True
    else:
        opt_rec, irep = solve_ilp(inst, time_limit=ilp_time_limit)
        opt, method, optimal = opt_rec.objective, "ilp", irep.optimal
    _verify(inst, opt_rec, method)
    row = {"arm": arm, "weight_mode": cfg.weight_mode, "degree_ratio": cfg.degree_ratio,
           "conflict_ratio": cfg.conflict_ratio, "edges": inst.num_edges,
           "conflicts": len(inst.conflicts), "d": d, "optimum": opt, "optimum_method": method,
           "optimal": optimal, "lp_round": lr.objective, "lp_bound": lrep.upper_bound,
           "greedy": g.objective, "lp_ratio": _ratio(lr.objective, opt),
           "greedy_ratio": _ratio(g.objective, opt),
           "greedy_bound_ok": opt <= (2 + d) * g.objective + 1e-9 * (1 + opt)}
    if with_sdp:
        s, srep, _ = solve_sdp_rounding(inst, restarts=restarts, seed=seed, tol=sdp_tol)
        _verify(inst, s, "sdp")
        row.update(sdp_round=s.objective, sdp_bound=srep.upper_bound, sdp_ratio=_ratio(s.objective, opt))
    return row


def ilp_regime_config(degree_ratio=0.5, conflict_ratio=0.1, weight_mode="money", seed=0, m=60, n=6,
                      window=30):
    """Sparse-graph regime for the ILP arm: window 30, threshold half of each seller's pairs."""
    return GenConfig(m=m, n=n, window=window, density=window / m, degree_ratio=degree_ratio,
                     conflict_ratio=conflict_ratio, threshold_mode=("fraction", 0.5),
                     weight_mode=weight_mode, seed=seed)


def run_cacrec_quality(conflict_ratios=CONFLICT_RATIOS, degree_ratios=DEGREE_RATIOS,
                       weight_modes=WEIGHT_MODES, seed=0, restarts=20, ilp_arm=True, ilp_sizes=((60, 6),),
                       ilp_time_limit=120.0, sdp_tol=1e-6, out=None, progress=None):
    rows = []
    for wm in weight_modes:
        for dr in degree_ratios:
            for cr in conflict_ratios:
                cfg = small_regime_config(dr, cr, wm, seed)
                rows.append(_quality_row("sdp", generate(cfg), cfg, with_sdp=True, restarts=restarts,
                                         seed=seed, ilp_time_limit=ilp_time_limit, sdp_tol=sdp_tol))
                if progress:
                    progress(rows[-1])
    if ilp_arm:
        for wm in weight_modes:
            for m, n in ilp_sizes:
                cfg = ilp_regime_config(weight_mode=wm, seed=seed, m=m, n=n)
                rows.append(_quality_row("ilp", generate(cfg), cfg, with_sdp=False, restarts=restarts,
                                         seed=seed, ilp_time_limit=ilp_time_limit, sdp_tol=sdp_tol))
                if progress:
                    progress(rows[-1])
    _check_quality_trend(rows)
    if out is not None:
        write_csv(rows, QUALITY_COLUMNS, out)
    return rows


def _check_quality_trend(rows):
    bad = [r for r in rows if not r["greedy_bound_ok"]]
    if bad:
        warnings.warn(f"{len(bad)} cells break the 2 + d greedy bound", RuntimeWarning, stacklevel=3)
    sdp = [r for r in rows if r["arm"] == "sdp"]
    if not sdp:
        return
    lo = max(r["degree_ratio"] for r in sdp)
    hi_c = max(r["conflict_ratio"] for r in sdp)
    corner = [r["greedy_ratio"] for r in sdp if r["degree_ratio"] == lo and r["conflict_ratio"] == hi_c]
    rest = [r["greedy_ratio"] for r in sdp if r["degree_ratio"] != lo]
    if corner and rest and min(corner) > statistics.fmean(rest):
        warnings.warn("greedy gap does not widen at the loosest degree / highest conflict corner",
                      RuntimeWarning, stacklevel=3)


# ---------------------------------------------------------------- greedy scaling


def greedy_scaling_config(fraction, seed=0, m=FULL_M, n=FULL_N):
    return full_config(0.02, m=m, n=n, degree_ratio=0.6, conflict_ratio=0.1,
                        threshold_mode=("fraction", 0.5), seed=seed, edge_fraction=fraction)


def timed_greedy(instances, repeats=3):
    """Greedy wall-clock times per instance with the cyclic GC paused.

    Sizes are timed round-robin, so a slow stretch on a shared machine lands on
    every size instead of on one.  Returns ``(recommendations, times)`` with
    ``times[i]`` the list of runs for instance ``i``.
    """
    times = [[] for _ in instances]
    recs = [None] * len(instances)
    enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for _ in range(repeats):
            for i, inst in enumerate(instances):
                t0 = time.perf_counter()
                recs[i], _ = solve_greedy(inst)
                times[i].append(time.perf_counter() - t0)
    finally:
        if enabled:
            gc.enable()
    return recs, times


def run_greedy_scaling(fractions=GREEDY_FRACTIONS, seed=0, repeats=5, m=FULL_M, n=FULL_N, out=None,
                       progress=None):
    """Greedy runtime per edge subset.

    ``runtime_s`` is the fastest of ``repeats`` runs (the least noisy estimate of
    the work itself); the median and spread are kept alongside.  ``doubling_ratio``
    compares ``runtime_s`` with the previous row.
    """
    insts = [generate(greedy_scaling_config(frac, seed, m, n)) for frac in fractions]
    recs, times = timed_greedy(insts, repeats)
    rows = []
    for frac, inst, rec, ts in zip(fractions, insts, recs, times):
        _verify(inst, rec, "greedy")
        best = min(ts)
        prev = rows[-1] if rows else None
        rows.append({"fraction": frac, "edges": inst.num_edges, "conflicts": len(inst.conflicts),
                     "runtime_s": best, "runtime_median_s": statistics.median(ts),
                     "runtime_max_s": max(ts), "objective": rec.objective,
                     "doubling_ratio": best / prev["runtime_s"] if prev and prev["runtime_s"] > 0 else None})
        if progress:
            progress(rows[-1])
    med = [r["runtime_median_s"] for r in rows]
    if any(b < a for a, b in zip(med, med[1:])):
        warnings.warn("median greedy runtime is not monotone in |E|", RuntimeWarning, stacklevel=2)
    if out is not None:
        write_csv(rows, GREEDY_COLUMNS, out)
    return rows


def linear_fit_slope(rows):
    """Slope of log(runtime) against log(edges); 1 means linear growth."""
    x = np.log([r["edges"] for r in rows])
    y = np.log([max(r["runtime_s"], 1e-9) for r in rows])
    return float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else float("nan")
