"""Acceptance criteria 1-10, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` and read the summary block at the end:
one PASS/FAIL line per criterion.
"""
import time

import numpy as np
import pytest

from bsrec import bench
from bsrec.cacrec_greedy import conflict_degree, solve_greedy
from bsrec.cacrec_milp import simplex_solve, build_milp, solve_ilp, solve_lp_rounding
from bsrec.cacrec_sdp import DEFAULT_CAP, solve_sdp_rounding
from bsrec.crec import solve_crec, solve_crec_lp
from bsrec.genlab import generate, random_conflict_instance, random_instance, small_regime_config
from bsrec.model import Recommendation, check_feasible, write_solution
from bsrec.oracle import MAX_EDGES, brute_force_cacrec, brute_force_crec, brute_force_rmis, random_rmis
from bsrec.reductions import rmis_to_cacrec

N_CREC = 200
N_CACREC = 200
N_RMIS = 100
SEED_SDP = 7


@pytest.fixture(scope="module")
def crec_suite():
    rng = np.random.default_rng(101)
    out = []
    t0 = time.perf_counter()
    for _ in range(N_CREC):
        inst = random_instance(rng, m_max=6, n_max=6, max_edges=14, bound_max=3)
        flow, _ = solve_crec(inst)
        oracle, _ = brute_force_crec(inst)
        x, lp_obj, _ = solve_crec_lp(inst)
        out.append((inst, flow, oracle, x, lp_obj))
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def cacrec_suite():
    rng = np.random.default_rng(202)
    out = []
    t0 = time.perf_counter()
    for k in range(N_CACREC):
        inst = random_conflict_instance(rng, max_edges=12, max_conflicts=6)
        rec = {"oracle": brute_force_cacrec(inst)[0]}
        rec["ilp"], _ = solve_ilp(inst)
        rec["greedy"], _ = solve_greedy(inst)
        rec["lp-round"], lrep = solve_lp_rounding(inst)
        sdp_obj = None
        if inst.num_edges <= DEFAULT_CAP:
            rec["sdp"], srep, res = solve_sdp_rounding(inst, seed=SEED_SDP + k)
            sdp_obj = res.objective
        out.append({"inst": inst, "rec": rec, "lp_bound": lrep.upper_bound, "sdp_obj": sdp_obj})
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def rmis_suite():
    rng = np.random.default_rng(303)
    out = []
    for _ in range(N_RMIS):
        r = random_rmis(rng, max_jobs=8, max_machines=4)
        inst = rmis_to_cacrec(r)
        rec, obj = brute_force_cacrec(inst)
        out.append((r, inst, rec, obj, brute_force_rmis(r)[1]))
    return out


@pytest.fixture(scope="module")
def small_regime():
    t0 = time.perf_counter()
    rows = []
    for wm in bench.WEIGHT_MODES:
        for dr in bench.DEGREE_RATIOS:
            for cr in bench.CONFLICT_RATIOS:
                inst = generate(small_regime_config(dr, cr, wm, seed=0))
                ilp, irep = solve_ilp(inst)
                sdp, _, _ = solve_sdp_rounding(inst, restarts=20, seed=SEED_SDP, tol=1e-6)
                greedy, _ = solve_greedy(inst)
                rows.append({"cell": (wm, dr, cr), "inst": inst, "ilp": ilp, "optimal": irep.optimal,
                             "sdp": sdp, "greedy": greedy})
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def greedy_scaling():
    t0 = time.perf_counter()
    insts = [generate(bench.greedy_scaling_config(frac, seed=0)) for frac in bench.GREEDY_FRACTIONS]
    recs, times = bench.timed_greedy(insts, repeats=5)
    verdicts = [check_feasible(i, r).ok for i, r in zip(insts, recs)]
    rows = [{"edges": i.num_edges, "runtime_s": min(ts)} for i, ts in zip(insts, times)]
    return rows, verdicts, time.perf_counter() - t0


def test_criterion_01_crec_exact(crec_suite, criterion):
    suite, elapsed = crec_suite
    bad = [i for i, (_, flow, oracle, _, _) in enumerate(suite) if flow.objective != oracle.objective]
    criterion(1, not bad, f"flow = oracle on {len(suite) - len(bad)}/{len(suite)} instances ({elapsed:.1f} s)")
    assert not bad


def test_criterion_02_lp_integral(crec_suite, criterion):
    suite, _ = crec_suite
    worst_frac = max(float(np.abs(x - np.round(x)).max(initial=0.0)) for *_, x, _ in suite)
    worst_rel = max(abs(lp - flow.objective) / max(1.0, abs(flow.objective)) for _, flow, _, _, lp in suite)
    ok = worst_frac <= 1e-7 and worst_rel <= 1e-6
    criterion(2, ok, f"max fractionality {worst_frac:.1e}, max relative objective gap {worst_rel:.1e}")
    assert ok


def test_criterion_03_ilp_exact(cacrec_suite, criterion):
    suite, elapsed = cacrec_suite
    bad = [c for c in suite if c["rec"]["ilp"].objective != c["rec"]["oracle"].objective]
    criterion(3, not bad, f"ilp = oracle on {len(suite) - len(bad)}/{len(suite)} instances ({elapsed:.1f} s)")
    assert not bad


def test_criterion_04_greedy_bound(cacrec_suite, criterion):
    suite, _ = cacrec_suite
    bad, worst = 0, 1.0
    for c in suite:
        opt, g = c["rec"]["oracle"].objective, c["rec"]["greedy"].objective
        d = conflict_degree(c["inst"]).d
        if g < opt / (2 + d):
            bad += 1
        if opt > 0:
            worst = min(worst, g / opt)
    criterion(4, bad == 0, f"{bad} violations of greedy >= opt/(2+d); lowest greedy/opt {worst:.3f}")
    assert bad == 0


def test_criterion_05_sandwich(cacrec_suite, criterion):
    suite, _ = cacrec_suite
    bad = []
    sdp_checked = 0
    for i, c in enumerate(suite):
        opt = c["rec"]["ilp"].objective
        if not (c["lp_bound"] >= opt - 1e-9 * (1 + opt) and opt >= c["rec"]["lp-round"].objective):
            bad.append((i, "lp"))
        if c["sdp_obj"] is not None:
            sdp_checked += 1
            if not (c["sdp_obj"] + 1e-4 >= opt >= c["rec"]["sdp"].objective):
                bad.append((i, "sdp"))
    criterion(5, not bad, f"{len(bad)} violations; LP sandwich on {len(suite)}, SDP sandwich on {sdp_checked}")
    assert not bad


def test_criterion_06_reduction(rmis_suite, criterion):
    bad = [r for r, _, _, cac, rmis in rmis_suite if cac != rmis]
    criterion(6, not bad, f"CAC-REC optimum = RMIS optimum on {len(rmis_suite) - len(bad)}/{len(rmis_suite)}")
    assert not bad


def test_criterion_07_small_regime(small_regime, criterion):
    rows, elapsed = small_regime
    ratios_sdp = [r["sdp"].objective / r["ilp"].objective for r in rows]
    ratios_greedy = [r["greedy"].objective / r["ilp"].objective for r in rows]
    feasible = all(check_feasible(r["inst"], r[k]).ok for r in rows for k in ("sdp", "greedy"))
    ok = feasible and all(r["optimal"] for r in rows) and min(ratios_sdp) >= 0.85 and min(ratios_greedy) >= 0.85
    criterion(7, ok, f"min sdp/opt {min(ratios_sdp):.4f}, min greedy/opt {min(ratios_greedy):.4f} "
                     f"over {len(rows)} cells ({elapsed:.1f} s)")
    assert ok


def test_criterion_08_greedy_scaling(greedy_scaling, criterion):
    rows, verdicts, elapsed = greedy_scaling
    ratios = [b["runtime_s"] / a["runtime_s"] for a, b in zip(rows, rows[1:])]
    ok = rows[-1]["edges"] == 734_760 and rows[0]["edges"] >= 85_000 and max(ratios) <= 2.5 and all(verdicts)
    detail = ", ".join(f"{r['edges']}: {r['runtime_s']:.2f}s" for r in rows)
    criterion(8, ok, f"doubling ratios {[round(x, 2) for x in ratios]} ({detail}; {elapsed:.0f} s total)")
    assert ok


def _solve_all(inst, seed):
    out = {"greedy": solve_greedy(inst), "lp-round": solve_lp_rounding(inst), "ilp": solve_ilp(inst),
           "crec-flow": solve_crec(inst), "sdp": solve_sdp_rounding(inst, seed=seed)[:2]}
    if inst.num_edges <= MAX_EDGES:
        out["oracle"] = (brute_force_cacrec(inst)[0], None)
    x, obj, _ = solve_crec_lp(inst)
    out["crec-lp"] = (Recommendation.from_edge_indices(inst, np.flatnonzero(x > 0.5)), None)
    return out


def test_criterion_09_determinism(tmp_path, criterion):
    rng = np.random.default_rng(909)
    insts = [random_conflict_instance(rng) for _ in range(25)]
    insts.append(generate(small_regime_config(0.5, 0.2, "rank", seed=4)))
    differing = []
    for k, inst in enumerate(insts):
        files = []
        for rep in range(2):
            path = tmp_path / f"{k}_{rep}"
            path.mkdir()
            for method, (rec, report) in _solve_all(inst, seed=k).items():
                ub = None if report is None else report.upper_bound
                write_solution(rec, path / f"{method}.json", method, upper_bound=ub)
            files.append(path)
        for f in sorted(files[0].iterdir()):
            if f.read_bytes() != (files[1] / f.name).read_bytes():
                differing.append((k, f.name))
    criterion(9, not differing, f"{len(differing)} differing files over {len(insts)} instances, all methods")
    assert not differing


def test_criterion_10_feasible(crec_suite, cacrec_suite, rmis_suite, small_regime, greedy_scaling, criterion):
    checked = bad = 0
    for inst, flow, oracle, x, _ in crec_suite[0]:
        plain = inst.without_conflicts()
        lp_rec = Recommendation.from_edge_indices(inst, np.flatnonzero(x > 0.5))
        for rec in (flow, oracle, lp_rec):
            checked += 1
            bad += not check_feasible(plain, rec).ok
    for c in cacrec_suite[0]:
        for rec in c["rec"].values():
            checked += 1
            bad += not check_feasible(c["inst"], rec).ok
    for _, inst, rec, _, _ in rmis_suite:
        checked += 1
        bad += not check_feasible(inst, rec).ok
    for r in small_regime[0]:
        for k in ("ilp", "sdp", "greedy"):
            checked += 1
            bad += not check_feasible(r["inst"], r[k]).ok
    verdicts = greedy_scaling[1]
    checked += len(verdicts)
    bad += sum(not v for v in verdicts)
    criterion(10, bad == 0, f"{checked - bad}/{checked} emitted solutions feasible")
    assert bad == 0


def test_lp_bound_matches_relaxation(cacrec_suite):
    # the bound used in criterion 5 is the simplex optimum of the full relaxation
    c = cacrec_suite[0][0]
    assert simplex_solve(build_milp(c["inst"])).objective == pytest.approx(c["lp_bound"])
