import itertools

import numpy as np
import pytest

from bsrec.cacrec_sdp import (SdpCapError, build_sdp, cholesky_vectors, pivoted_cholesky, projection_scores,
                              round_sdp, solve_sdp, solve_sdp_rounding)
from bsrec.genlab import random_conflict_instance
from bsrec.model import Instance, Recommendation, check_feasible, conflict_pairs_at_seller
from bsrec.oracle import brute_force_cacrec


def two_edge_example():
    return Instance.from_edges(2, 1, [(0, 0, 5), (1, 0, 3)], 2, 2, conflicts=[(0, 1)], threshold=0)


def test_single_edge_program():
    prog = build_sdp(Instance.from_edges(1, 1, [(0, 0, 4)], 1, 1))
    assert prog.dim == 1 and prog.W.tolist() == [[4.0]]
    assert [M.tolist() for M in prog.buyer_mats] == [[[1.0]]]
    assert [M.tolist() for M in prog.seller_mats] == [[[1.0]]]
    assert not prog.conflict_mats[0].any()


def test_conflict_matrix_entries():
    prog = build_sdp(two_edge_example())
    C = prog.conflict_mats[0]
    assert C.tolist() == [[0.0, 0.5], [0.5, 0.0]]


def test_single_edge_solve():
    res = solve_sdp(build_sdp(Instance.from_edges(1, 1, [(0, 0, 4)], 1, 1)))
    assert res.converged and res.objective == pytest.approx(4.0, abs=1e-5)
    assert res.Y[0, 0] == pytest.approx(1.0, abs=1e-5)
    assert res.upper_bound >= 4.0 - 1e-9


def test_zero_bounds():
    inst = Instance.from_edges(2, 2, [(0, 0, 4), (1, 1, 3)], 0, 0)
    res = solve_sdp(build_sdp(inst))
    assert res.objective == pytest.approx(0.0, abs=1e-6) and np.abs(res.Y).max() < 1e-5
    rec, _, _ = solve_sdp_rounding(inst)
    assert len(rec) == 0


def test_traces_count_constraints_on_integral_points():
    rng = np.random.default_rng(51)
    for _ in range(40):
        inst = random_conflict_instance(rng, max_edges=8)
        prog = build_sdp(inst)
        for bits in itertools.product((0, 1), repeat=inst.num_edges):
            x = np.array(bits, float)
            Y = np.outer(x, x)
            rec = Recommendation.from_edge_indices(inst, np.flatnonzero(x))
            bv, sv, cv = prog.constraint_values(Y)
            assert np.sum(prog.W * Y) == pytest.approx(rec.objective)
            assert bv.tolist() == np.bincount(inst.edge_buyer[x > 0], minlength=inst.m).tolist()
            assert sv.tolist() == np.bincount(inst.edge_seller[x > 0], minlength=inst.n).tolist()
            assert cv.tolist() == [conflict_pairs_at_seller(inst, rec, k) for k in range(inst.n)]
            if inst.num_edges > 5:
                break


def test_cap_refusal():
    edges = [(i, j, 1) for i in range(4) for j in range(4)]
    with pytest.raises(SdpCapError, match="cap"):
        build_sdp(Instance.from_edges(4, 4, edges, 1, 1), cap=10)


class TestFactor:
    def test_identity(self):
        V = cholesky_vectors(np.eye(3))
        assert np.allclose(V @ V.T, np.eye(3)) and np.allclose(np.abs(V), np.eye(3))

    def test_rank_one(self):
        V = cholesky_vectors(np.ones((2, 2)))
        assert np.allclose(V, [[1, 0], [1, 0]])

    def test_random_reconstruction(self):
        rng = np.random.default_rng(52)
        for r in (1, 3, 6):
            B = rng.standard_normal((6, r))
            Y = B @ B.T
            V = cholesky_vectors(Y)
            assert np.abs(V @ V.T - Y).max() <= 1e-8 * max(1.0, np.abs(Y).max())
            L, piv, rank = pivoted_cholesky(Y)
            assert rank == r and np.allclose(L @ L.T, Y[piv][:, piv])
            assert np.allclose(np.triu(L, 1), 0)

    def test_rejects_indefinite(self):
        with pytest.raises(np.linalg.LinAlgError):
            cholesky_vectors(np.diag([1.0, -1.0]))


class TestRounding:
    def test_zero_vectors(self):
        rec, rep = round_sdp(np.zeros((2, 2)), two_edge_example())
        assert len(rec) == 0 and rep.objective == 0

    def test_rank_one_recovers_selection(self):
        rng = np.random.default_rng(53)
        for _ in range(50):
            inst = random_conflict_instance(rng)
            target, opt = brute_force_cacrec(inst)
            x = np.zeros(inst.num_edges)
            x[target.edge_indices(inst)] = 1
            rec, _ = round_sdp(cholesky_vectors(np.outer(x, x)), inst, restarts=3, seed=1)
            assert rec.objective >= opt - 1e-9

    def test_scores(self):
        assert projection_scores(np.array([[3.0, 0], [0, -2]]), np.array([0.0, 2.0])).tolist() == [0.0, 2.0]

    def test_deterministic(self):
        inst = random_conflict_instance(np.random.default_rng(54))
        a = solve_sdp_rounding(inst, seed=3)
        b = solve_sdp_rounding(inst, seed=3)
        assert a[0] == b[0] and a[1].extra == b[1].extra


def test_sandwich_and_feasibility():
    rng = np.random.default_rng(55)
    for k in range(60):
        inst = random_conflict_instance(rng)
        _, opt = brute_force_cacrec(inst)
        rec, rep, res = solve_sdp_rounding(inst, seed=k)
        assert check_feasible(inst, rec).ok
        assert rec.objective <= opt + 1e-9 <= rep.upper_bound + 2e-9 * (1 + opt)
        assert res.objective + 1e-4 >= opt


def _cvxpy_value(prog):
    cp = pytest.importorskip("cvxpy")
    N = prog.dim
    Y = cp.Variable((N, N), symmetric=True)
    cons = [Y >> 0, Y >= 0, cp.diag(Y) <= 1]
    for mats, rhs in ((prog.buyer_mats, prog.buyer_rhs), (prog.seller_mats, prog.seller_rhs),
                      (prog.conflict_mats, prog.conflict_rhs)):
        cons += [cp.trace(M @ Y) <= r for M, r in zip(mats, rhs)]
    p = cp.Problem(cp.Maximize(cp.trace(prog.W @ Y)), cons)
    p.solve(solver="CLARABEL")
    return p.value


def test_matches_reference_conic_solver():
    rng = np.random.default_rng(56)
    for _ in range(8):
        inst = random_conflict_instance(rng, max_edges=10)
        if inst.num_edges == 0:
            continue
        prog = build_sdp(inst)
        res = solve_sdp(prog, tol=1e-8)
        ref = _cvxpy_value(prog)
        assert res.objective == pytest.approx(ref, abs=1e-5 * (1 + abs(ref)))
        assert res.upper_bound >= ref - 1e-6 * (1 + abs(ref))
