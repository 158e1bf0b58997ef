import csv
import warnings

import numpy as np
import pytest

from bsrec import bench
from bsrec.genlab import generate
from bsrec.model import Instance, Recommendation


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_crec_scaling_small(tmp_path):
    out = tmp_path / "crec.csv"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rows = bench.run_crec_scaling(densities=(0.1, 0.2), ratios=(0.3, 0.5), fractions=(0.5, 1.0), runs=2,
                                      m=200, n=20, out=out)
    assert len(rows) == 8
    got = read_rows(out)
    assert list(got[0]) == bench.CREC_COLUMNS and len(got) == 8
    dense = [r for r in rows if r["density"] == 0.2 and r["ratio"] == 0.5 and r["fraction"] == 1.0][0]
    sparse = [r for r in rows if r["density"] == 0.1 and r["ratio"] == 0.5 and r["fraction"] == 1.0][0]
    assert dense["edges"] == 2 * sparse["edges"]


def test_quality_small(tmp_path):
    out = tmp_path / "q.csv"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rows = bench.run_cacrec_quality(conflict_ratios=(0.1,), degree_ratios=(0.3, 0.6), weight_modes=("rank",),
                                        restarts=5, ilp_sizes=((30, 3),), out=out)
    assert [r["arm"] for r in rows] == ["sdp", "sdp", "ilp"]
    for r in rows:
        assert r["greedy_bound_ok"] and r["optimal"]
        assert r["greedy"] <= r["optimum"] + 1e-9 and r["lp_round"] <= r["optimum"] + 1e-9
        assert r["lp_bound"] >= r["optimum"] - 1e-6
    for r in rows[:2]:
        assert r["sdp_round"] <= r["optimum"] + 1e-9 <= r["sdp_bound"] + 1e-6
    assert list(read_rows(out)[0]) == bench.QUALITY_COLUMNS


def test_greedy_scaling_small(tmp_path):
    out = tmp_path / "g.csv"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rows = bench.run_greedy_scaling(fractions=(0.25, 0.5, 1.0), repeats=2, m=2000, n=100, out=out)
    assert [r["edges"] for r in rows] == sorted(r["edges"] for r in rows)
    assert rows[0]["doubling_ratio"] is None and rows[1]["doubling_ratio"] > 0
    assert list(read_rows(out)[0]) == bench.GREEDY_COLUMNS


def test_full_greedy_graph_size():
    inst = generate(bench.greedy_scaling_config(1.0))
    assert inst.num_edges == 734_760


def test_density_trend_warning():
    rows = [{"density": d, "ratio": 0.1, "fraction": 1.0, "runtime_s": t} for d, t in ((0.1, 3.0), (0.2, 2.0), (0.3, 1.0))]
    with pytest.warns(RuntimeWarning, match="density"):
        bench._check_density_trend(rows)


def test_verify_raises():
    inst = Instance.from_edges(2, 1, [(0, 0, 1), (1, 0, 1)], 1, 1)
    with pytest.raises(bench.BenchError):
        bench._verify(inst, Recommendation.from_edge_indices(inst, [0, 1]), "x")


def test_slope():
    rows = [{"edges": e, "runtime_s": 0.001 * e} for e in (100, 200, 400)]
    assert bench.linear_fit_slope(rows) == pytest.approx(1.0)
