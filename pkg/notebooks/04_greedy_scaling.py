# %% [markdown]
# # Greedy runtime on the 2% graph
#
# Edge subsets of the 734,760-edge graph, each double the previous one.  Linear
# growth shows up as doubling ratios near 2 and a log-log slope near 1.

# %%
from bsrec import bench

rows = bench.run_greedy_scaling(repeats=3)

# %%
for r in rows:
    ratio = "" if r["doubling_ratio"] is None else f"{r['doubling_ratio']:.2f}"
    print(f"{r['edges']:8d} edges  {r['runtime_s']:7.3f} s  (median {r['runtime_median_s']:.3f})  {ratio}")
print("log-log slope", round(bench.linear_fit_slope(rows), 3))
