import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsrec.crec import build_lp, build_network, solve_crec, solve_crec_lp, weight_scale
from bsrec.genlab import random_instance
from bsrec.model import Instance, check_feasible
from bsrec.oracle import brute_force_crec


def four_edges():
    return Instance.from_edges(2, 2, [(0, 0, 4), (0, 1, 1), (1, 0, 2), (1, 1, 3)], 1, 1)


@pytest.mark.parametrize("method", ["scaling", "ssp"])
def test_best_matching(method):
    rec, rep = solve_crec(four_edges(), method=method)
    assert sorted(rec.pairs()) == [(0, 0), (1, 1)] and rec.objective == 7
    assert rep.optimal and rep.extra["method"] == method


def test_zero_bounds():
    inst = four_edges().replace(buyer_bound=np.zeros(2, int))
    rec, _ = solve_crec(inst)
    assert len(rec) == 0 and rec.objective == 0
    x, obj, _ = solve_crec_lp(inst)
    assert obj == 0 and not x.any()


def test_lp_on_four_edges():
    x, obj, _ = solve_crec_lp(four_edges())
    assert obj == pytest.approx(7.0)
    assert np.array_equal(np.round(x), x)


def test_single_edge_incidence():
    lp = build_lp(Instance.from_edges(1, 1, [(0, 0, 2)], 1, 1))
    assert lp.A.toarray().tolist() == [[1.0], [1.0]]


def test_incidence_columns():
    rng = np.random.default_rng(4)
    inst = random_instance(rng, max_edges=14)
    A = build_lp(inst).A.toarray()
    assert np.all(A.sum(axis=0) == 2)


def test_network_shape():
    net = build_network(four_edges())
    assert net.num_nodes == 2 + 2 + 2 and len(net.edge_arc) == 4


def test_conflicts_ignored():
    inst = Instance.from_edges(2, 1, [(0, 0, 5), (1, 0, 3)], 1, 2, conflicts=[(0, 1)], threshold=0)
    rec, _ = solve_crec(inst)
    assert rec.objective == 8


def test_weight_scale():
    assert weight_scale([1, 2.5, 0.125]) == 3
    assert weight_scale([1e-12]) is None
    assert weight_scale([3.0]) == 0


def test_float_weights_fall_back_to_ssp():
    inst = Instance.from_edges(2, 1, [(0, 0, np.pi), (1, 0, np.e)], 1, 1)
    rec, rep = solve_crec(inst)
    assert rep.extra["method"] == "ssp" and rec.objective == pytest.approx(np.pi)
    with pytest.raises(ValueError):
        solve_crec(inst, method="scaling")


def test_matches_oracle_and_ssp():
    rng = np.random.default_rng(17)
    for _ in range(150):
        inst = random_instance(rng, max_edges=14, bound_max=3)
        a, _ = solve_crec(inst, method="scaling")
        b, _ = solve_crec(inst, method="ssp")
        _, opt = brute_force_crec(inst)
        assert a.objective == b.objective == opt
        assert check_feasible(inst.without_conflicts(), a).ok


def test_larger_instances_agree_with_lp():
    rng = np.random.default_rng(2)
    for _ in range(5):
        inst = random_instance(rng, m_max=30, n_max=12, max_edges=200, bound_max=4, weight_max=1000)
        rec, _ = solve_crec(inst)
        _, obj, _ = solve_crec_lp(inst)
        assert rec.objective == pytest.approx(obj, rel=1e-9)


@settings(max_examples=40)
@given(seed=st.integers(0, 2 ** 32), factor=st.integers(2, 9))
def test_weight_scaling_scales_objective(seed, factor):
    inst = random_instance(np.random.default_rng(seed))
    base = solve_crec(inst)[0].objective
    scaled = solve_crec(inst.replace(weight=inst.weight * factor))[0].objective
    assert scaled == base * factor


@settings(max_examples=40)
@given(seed=st.integers(0, 2 ** 32), which=st.integers(0, 100))
def test_raising_a_bound_never_hurts(seed, which):
    inst = random_instance(np.random.default_rng(seed))
    base = solve_crec(inst)[0].objective
    bb = inst.buyer_bound.copy()
    bb[which % inst.m] += 1
    assert solve_crec(inst.replace(buyer_bound=bb))[0].objective >= base
