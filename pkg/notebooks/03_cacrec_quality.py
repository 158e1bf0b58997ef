# %% [markdown]
# # Solution quality of the CAC-REC heuristics
#
# The 26-buyer, 5-seller regime is small enough that the SDP relaxation and the
# exact ILP both run on every cell.  Each heuristic is reported as a fraction of
# the optimum.

# %%
import warnings

from bsrec import bench

# %%
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    rows = bench.run_cacrec_quality(restarts=20, ilp_arm=False)
for w in caught:
    print("warning:", w.message)

# %%
print(f"{'weight':>6} {'D ratio':>7} {'C ratio':>7} {'opt':>12} {'sdp':>6} {'lp':>6} {'greedy':>6}")
for r in rows:
    print(f"{r['weight_mode']:>6} {r['degree_ratio']:7.2f} {r['conflict_ratio']:7.2f} {r['optimum']:12.2f} "
          f"{r['sdp_ratio']:6.3f} {r['lp_ratio']:6.3f} {r['greedy_ratio']:6.3f}")

# %% [markdown]
# Worst cell per method.  Everything stays well above the 2 + d worst case.

# %%
for key in ("sdp_ratio", "lp_ratio", "greedy_ratio"):
    worst = min(rows, key=lambda r: r[key])
    print(f"{key:13s} {worst[key]:.4f} at {worst['weight_mode']}, D={worst['degree_ratio']}, "
          f"C={worst['conflict_ratio']}")
