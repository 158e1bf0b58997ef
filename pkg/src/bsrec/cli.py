"""Command-line entry point: ``bsrec generate|validate|solve|reduce|bench|compare``.

Exit codes: 0 success, 1 invalid or infeasible input, 2 solver limit hit,
3 internal error.  Reports go to stdout; files are written only via ``--out``
(relative paths land under ``$BSREC_OUT_DIR`` when it is set).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import bench, genlab
from .cacrec_greedy import conflict_degree, solve_greedy
from .cacrec_milp import solve_ilp, solve_lp_rounding
from .cacrec_sdp import DEFAULT_CAP, SdpCapError, solve_sdp_rounding
from .crec import solve_crec, solve_crec_lp
from .model import (InstanceError, Recommendation, SolveReport, check_feasible, check_solution,
                    read_instance, read_solution, validate, write_instance, write_solution)
from .oracle import OracleLimitError, brute_force_cacrec
from .reductions import read_rmis, rmis_to_cacrec
from .simplex import LpError

OUT_ENV = "BSREC_OUT_DIR"
METHODS = ("crec-flow", "crec-lp", "greedy", "lp-round", "ilp", "sdp", "oracle")
EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class LimitHit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def out_path(p) -> Path:
    p = Path(p)
    base = os.environ.get(OUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _need_seed(args, what):
    if args.seed is None:
        raise UsageError(f"{what} is random; pass --seed")


# ---------------------------------------------------------------- solving


def run_method(inst, method, args) -> tuple[Recommendation, SolveReport]:
    """Dispatch one method; raises ``LimitHit`` (with partial result attached) on limits."""
    if method == "crec-flow":
        return solve_crec(inst)
    if method == "crec-lp":
        t0 = time.perf_counter()
        x, obj, res = solve_crec_lp(inst)
        frac = float(np.abs(x - np.round(x)).max(initial=0.0))
        rec = Recommendation.from_edge_indices(inst, np.flatnonzero(x > 0.5))
        return rec, SolveReport("crec-lp", rec.objective, time.perf_counter() - t0, feasible=True,
                                upper_bound=obj, optimal=frac <= 1e-7, iterations=res.iterations,
                                extra={"max_fractionality": frac})
    if method == "greedy":
        return solve_greedy(inst)
    if method == "lp-round":
        return solve_lp_rounding(inst)
    if method == "ilp":
        rec, rep = solve_ilp(inst, node_limit=args.node_limit, time_limit=args.time_limit)
        if rep.extra.get("limit_hit"):
            err = LimitHit(f"ilp stopped at a limit after {rep.nodes} nodes; best bound {rep.upper_bound:g}")
            err.result = (rec, rep)
            raise err
        return rec, rep
    if method == "sdp":
        _need_seed(args, "sdp rounding")
        try:
            rec, rep, _ = solve_sdp_rounding(inst, restarts=args.restarts, seed=args.seed, cap=args.sdp_cap)
        except SdpCapError as exc:
            raise LimitHit(str(exc)) from None
        return rec, rep
    if method == "oracle":
        t0 = time.perf_counter()
        try:
            rec, obj = brute_force_cacrec(inst)
        except OracleLimitError as exc:
            raise LimitHit(str(exc)) from None
        return rec, SolveReport("oracle", obj, time.perf_counter() - t0, feasible=True, upper_bound=obj,
                                optimal=True)
    raise UsageError(f"unknown method {method!r}")


def _report_lines(inst, rec, rep):
    target = inst.without_conflicts() if rep.method.startswith("crec") else inst
    verdict = check_feasible(target, rec)
    lines = [f"method      {rep.method}",
             f"objective   {rep.objective:.10g}",
             f"selected    {len(rec)} of {inst.num_edges} edges",
             f"feasible    {'yes' if verdict.ok else 'NO: ' + verdict.violations[0]}"]
    if rep.method.startswith("crec") and len(inst.conflicts):
        full = check_feasible(inst, rec)
        lines.append(f"conflicts   ignored by C-REC ({'still satisfied' if full.ok else 'violated'})")
    if rep.upper_bound is not None:
        lines.append(f"bound       {rep.upper_bound:.10g}")
    if rep.optimal is not None:
        lines.append(f"optimal     {rep.optimal}")
    lines.append(f"time        {rep.elapsed_s:.3f} s")
    return lines, verdict.ok


def cmd_solve(args):
    inst = read_instance(args.instance)
    code = EXIT_OK
    try:
        rec, rep = run_method(inst, args.method, args)
    except LimitHit as exc:
        print(f"limit: {exc}", file=sys.stderr)
        if not hasattr(exc, "result"):
            return EXIT_LIMIT
        rec, rep = exc.result
        code = EXIT_LIMIT
    lines, ok = _report_lines(inst, rec, rep)
    print("\n".join(lines))
    if not ok:
        return EXIT_INTERNAL
    if args.out:
        write_solution(rec, out_path(args.out), rep.method, upper_bound=rep.upper_bound)
    if args.report:
        out_path(args.report).write_text(json.dumps(rep.as_dict(), indent=1, default=float) + "\n")
    return code


def cmd_compare(args):
    inst = read_instance(args.instance)
    methods = args.methods.split(",") if args.methods else \
        ["oracle", "ilp", "lp-round", "greedy"] + (["sdp"] if args.seed is not None else [])
    results = []
    for method in methods:
        try:
            rec, rep = run_method(inst, method, args)
        except LimitHit as exc:
            print(f"{method}: skipped ({exc})", file=sys.stderr)
            continue
        target = inst.without_conflicts() if method.startswith("crec") else inst
        results.append((method, rec, rep, check_feasible(target, rec).ok))
    if not results:
        return EXIT_LIMIT
    best = max(r[2].objective for r in results)
    print(f"{'method':<10} {'objective':>14} {'bound':>14} {'ratio':>7} {'feasible':>8} {'time_s':>8}")
    for method, rec, rep, ok in results:
        bound = "" if rep.upper_bound is None else f"{rep.upper_bound:.6g}"
        ratio = rep.objective / best if best else 1.0
        print(f"{method:<10} {rep.objective:>14.6g} {bound:>14} {ratio:>7.4f} {str(ok):>8} {rep.elapsed_s:>8.3f}")
    d = conflict_degree(inst).d
    print(f"conflict degree d = {d}; greedy guarantee optimum <= {2 + d} x greedy")
    if args.out:
        rows = [{"method": m, "objective": rep.objective, "upper_bound": rep.upper_bound, "feasible": ok}
                for m, _, rep, ok in results]
        out_path(args.out).write_text(json.dumps(rows, indent=1) + "\n")
    return EXIT_OK if all(r[3] for r in results) else EXIT_INTERNAL


# ---------------------------------------------------------------- other commands


def cmd_generate(args):
    _need_seed(args, "instance generation")
    if args.threshold_fraction is not None:
        tmode = ("fraction", args.threshold_fraction)
    else:
        tmode = ("constant", args.threshold)
    if args.preset == "small":
        cfg = genlab.small_regime_config(args.degree_ratio, args.conflict_ratio, args.weight, args.seed)
    else:
        m = args.m or genlab.FULL_M
        n = args.n or genlab.FULL_N
        window = args.window
        if window is None and args.preset == "full" and m == genlab.FULL_M:
            window = genlab.FULL_WINDOWS.get(round(args.density, 4))
        cfg = genlab.GenConfig(m=m, n=n, density=args.density, degree_ratio=args.degree_ratio,
                               conflict_ratio=args.conflict_ratio, threshold_mode=tmode,
                               weight_mode=args.weight, seed=args.seed, window=window,
                               edge_fraction=args.edge_fraction)
    inst, rep = genlab.generate(cfg, with_report=True)
    print(f"buyers {inst.m}, sellers {inst.n}, edges {inst.num_edges}, conflicts {len(inst.conflicts)}")
    print(f"window {rep.window}, stride {rep.stride}, realized density {rep.realized_density:.5f}")
    for note in rep.notes:
        print(f"note: {note}")
    write_instance(inst, out_path(args.out))
    if args.report:
        out_path(args.report).write_text(json.dumps(rep.as_dict(), indent=1) + "\n")
    return EXIT_OK


def cmd_validate(args):
    try:
        inst = read_instance(args.instance, check=False)
    except InstanceError as exc:
        print(f"invalid: {exc}")
        return EXIT_INPUT
    problems = validate(inst)
    if not problems and args.solution:
        rec, _ = read_solution(args.solution)
        try:
            problems = check_solution(inst, rec)
        except InstanceError as exc:
            problems = [str(exc)]
    for p in problems:
        print(f"violation: {p}")
    if problems:
        return EXIT_INPUT
    print("ok")
    return EXIT_OK


def cmd_reduce(args):
    rmis = read_rmis(args.input)
    inst = rmis_to_cacrec(rmis)
    write_instance(inst, out_path(args.out))
    print(f"{rmis.jobs} jobs, {rmis.machines} machines -> {inst.num_edges} edges, "
          f"{len(inst.conflicts)} conflict pairs")
    return EXIT_OK


def _floats(s):
    return tuple(float(x) for x in s.split(","))


def cmd_bench(args):
    _need_seed(args, "benchmark instance generation")
    out = out_path(Path(args.out) / f"{args.experiment}.csv")
    show = lambda row: print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                                       for k, v in row.items()), flush=True)
    m = args.m or genlab.FULL_M
    n = args.n or genlab.FULL_N
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.experiment == "crec-scaling":
            kw = {}
            if args.densities:
                kw["densities"] = _floats(args.densities)
            if args.ratios:
                kw["ratios"] = _floats(args.ratios)
            if args.fractions:
                kw["fractions"] = _floats(args.fractions)
            bench.run_crec_scaling(seed=args.seed, runs=args.runs, m=m, n=n, out=out, progress=show, **kw)
        elif args.experiment == "cacrec-quality":
            bench.run_cacrec_quality(seed=args.seed, restarts=args.restarts, out=out, progress=show)
        else:
            kw = {"fractions": _floats(args.fractions)} if args.fractions else {}
            rows = bench.run_greedy_scaling(seed=args.seed, m=m, n=n, out=out, progress=show, **kw)
            print(f"log-log slope {bench.linear_fit_slope(rows):.3f}")
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bsrec", description="Buyer-to-seller recommendation under capacity and conflict constraints.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--preset", choices=("full", "small", "custom"), default="custom")
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--density", type=float, default=0.005)
    g.add_argument("--window", type=int)
    g.add_argument("--degree-ratio", type=float, default=0.5)
    g.add_argument("--conflict-ratio", type=float, default=0.0)
    g.add_argument("--threshold", type=int, default=0, help="constant per-seller threshold")
    g.add_argument("--threshold-fraction", type=float, help="threshold as a fraction of each seller's pairs")
    g.add_argument("--weight", choices=("money", "rank"), default="money")
    g.add_argument("--edge-fraction", type=float, default=1.0)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--report", help="write the generation report (window, stride, density, hash)")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check an instance, optionally with a solution")
    v.add_argument("instance")
    v.add_argument("--solution")
    v.set_defaults(func=cmd_validate)

    def solver_flags(q):
        q.add_argument("--seed", type=int)
        q.add_argument("--restarts", type=int, default=20)
        q.add_argument("--sdp-cap", type=int, default=DEFAULT_CAP)
        q.add_argument("--node-limit", type=int)
        q.add_argument("--time-limit", type=float)

    s = sub.add_parser("solve", help="solve an instance with one method")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--out")
    s.add_argument("--report")
    solver_flags(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="run several methods side by side")
    c.add_argument("instance")
    c.add_argument("--methods", help="comma-separated; default oracle,ilp,lp-round,greedy(,sdp with --seed)")
    c.add_argument("--out")
    solver_flags(c)
    c.set_defaults(func=cmd_compare)

    r = sub.add_parser("reduce", help="build a CAC-REC instance from another problem")
    r.add_argument("source", choices=("rmis",))
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reduce)

    b = sub.add_parser("bench", help="run an experiment and write a CSV")
    b.add_argument("experiment", choices=("crec-scaling", "cacrec-quality", "greedy-scaling"))
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--seed", type=int)
    b.add_argument("--m", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--runs", type=int, default=5)
    b.add_argument("--restarts", type=int, default=20)
    b.add_argument("--densities")
    b.add_argument("--ratios")
    b.add_argument("--fractions")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (InstanceError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LimitHit as exc:
        print(f"limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (LpError, Exception) as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
