import itertools

import numpy as np
import pytest

from bsrec.model import Recommendation, check_feasible
from bsrec.oracle import RmisInstance, brute_force_cacrec, brute_force_rmis, random_rmis, schedule_feasible, \
    schedule_revenue
from bsrec.reductions import (cacrec_solution_to_schedule, read_rmis, rmis_from_dict, rmis_to_cacrec,
                              rmis_to_dict, schedule_to_recommendation, write_rmis)


def overlapping_pair():
    return RmisInstance(1, [{0: 5}, {0: 3}], [(0, 2), (1, 3)])


def test_overlapping_pair():
    inst = rmis_to_cacrec(overlapping_pair())
    assert inst.num_edges == 2 and inst.weight.tolist() == [5.0, 3.0]
    assert inst.conflicts.tolist() == [[0, 1]]
    assert inst.buyer_bound.tolist() == [1, 1] and inst.seller_bound.tolist() == [2]
    assert inst.threshold.tolist() == [0]
    assert brute_force_cacrec(inst)[1] == 5


def test_disjoint_and_touching_intervals():
    r = RmisInstance(2, [{0: 1, 1: 2}, {1: 4}, {0: 1}], [(0, 1), (1, 2), (5, 6)])
    assert len(rmis_to_cacrec(r).conflicts) == 0


def test_invalid_rmis():
    with pytest.raises(ValueError):
        rmis_to_cacrec(RmisInstance(1, [{0: 1}], [(2, 1)]))


def test_double_assignment_rejected():
    r = RmisInstance(2, [{0: 1, 1: 1}], [(0, 1)])
    inst = rmis_to_cacrec(r)
    with pytest.raises(ValueError, match="two machines"):
        cacrec_solution_to_schedule(r, Recommendation.from_edge_indices(inst, [0, 1]))


def test_feasible_sets_correspond():
    rng = np.random.default_rng(61)
    for _ in range(40):
        r = random_rmis(rng, max_jobs=5, max_machines=3)
        inst = rmis_to_cacrec(r)
        options = [[None] + r.eligible(j) for j in range(r.jobs)]
        for sched in itertools.product(*options):
            rec = schedule_to_recommendation(r, inst, list(sched))
            assert schedule_feasible(r, list(sched)) == check_feasible(inst, rec).ok
            if check_feasible(inst, rec).ok:
                assert rec.objective == pytest.approx(schedule_revenue(r, list(sched)))
                assert cacrec_solution_to_schedule(r, rec) == list(sched)


def test_optima_agree():
    rng = np.random.default_rng(62)
    for _ in range(60):
        r = random_rmis(rng)
        inst = rmis_to_cacrec(r)
        rec, obj = brute_force_cacrec(inst)
        assert obj == brute_force_rmis(r)[1]
        sched = cacrec_solution_to_schedule(r, rec)
        assert schedule_feasible(r, sched) and schedule_revenue(r, sched) == obj


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(63)
    for k in range(10):
        r = random_rmis(rng)
        write_rmis(r, tmp_path / f"{k}.json")
        back = read_rmis(tmp_path / f"{k}.json")
        assert back.revenue == r.revenue and back.intervals == r.intervals and back.machines == r.machines
    d = rmis_to_dict(overlapping_pair())
    assert d["jobs"][0] == {"interval": [0, 2], "revenue": {"1": 5}}
    assert rmis_from_dict(d).revenue == overlapping_pair().revenue
