# %% [markdown]
# # Quickstart
#
# Build a small instance, solve it every way the package knows, and check the
# answers against each other.

# %%
from bsrec import Instance, check_feasible
from bsrec.cacrec_greedy import conflict_degree, solve_greedy
from bsrec.cacrec_milp import solve_ilp, solve_lp_rounding
from bsrec.cacrec_sdp import solve_sdp_rounding
from bsrec.crec import solve_crec
from bsrec.oracle import brute_force_cacrec

# %% [markdown]
# Three buyers, two sellers.  Buyers 0 and 1 conflict, and seller 0 tolerates
# no conflicting pair in its list.

# %%
inst = Instance.from_edges(
    3, 2,
    [(0, 0, 6), (1, 0, 5), (2, 0, 2), (0, 1, 1), (1, 1, 4), (2, 1, 3)],
    buyer_bound=1, seller_bound=2, conflicts=[(0, 1)], threshold=[0, 1],
)
print(inst.num_edges, "edges;", "conflict degree", conflict_degree(inst).d)

# %% [markdown]
# Ignoring conflicts gives the C-REC optimum, an upper bound for everything below.

# %%
rec, rep = solve_crec(inst)
print("flow", rec.objective, rec.pairs(), "conflict-feasible:", check_feasible(inst, rec).ok)

# %%
results = {
    "oracle": brute_force_cacrec(inst)[0],
    "ilp": solve_ilp(inst)[0],
    "lp-round": solve_lp_rounding(inst)[0],
    "greedy": solve_greedy(inst)[0],
    "sdp": solve_sdp_rounding(inst, seed=0)[0],
}
for name, r in results.items():
    print(f"{name:9s} {r.objective:5.1f}  {r.pairs()}  feasible={check_feasible(inst, r).ok}")

# %% [markdown]
# The ILP matches the exhaustive oracle; the heuristics sit at or below it.

# %%
assert results["ilp"].objective == results["oracle"].objective
assert all(r.objective <= results["oracle"].objective for r in results.values())
