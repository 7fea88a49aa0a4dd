# %% [markdown]
# # Reducing a distributionally robust problem
#
# A synthetic covering problem with 50 cost scenarios and a confidence box
# around sampled probabilities is solved in full and after clustering to K atoms.
# The reduced decision is then evaluated under the original ambiguity set. That value
# must not exceed `alpha beta` times the original optimum.

# %%
import statistics

from scenred import dro
from scenred.harness import GridConfig, rows_to_csv, run_grid, synthetic_linear_instance, synthetic_portfolio_instance

# %%
inst = synthetic_linear_instance(50, 0.5, seed=0)
original = dro.solve(inst)
print(f"original value {original.value:.4f} in {original.time * 1e3:.1f} ms")

for method in ("opt", "kmeans", "hyperrect"):
    rep, _, _ = dro.reduce_and_solve(inst, method, 5, original=original)
    print(f"{method:>9}: K={rep.K} AF={rep.AF:.4f} TF={rep.TF:.3f} SRF={rep.SRF:.1f} "
          f"guarantee={rep.guarantee:.3f} evaluated={rep.evaluated_value:.4f} "
          f"bound={rep.certificate_bound:.4f}")

# %% [markdown]
# ## Time factor across seeds

# %%
tfs = [dro.reduce_and_solve(synthetic_linear_instance(50, 0.5, seed=s), "kmeans", 5)[0].TF for s in range(5)]
print("median TF", statistics.median(tfs))

# %% [markdown]
# ## Portfolio variance with covariance scenarios

# %%
port = synthetic_portfolio_instance(4, 8, seed=1)
for method in ("opt", "kmeans"):
    rep, orig, red = dro.reduce_and_solve(port, method, 3)
    print(f"{method}: original {orig.value:.5f}, reduced {red.value:.5f}, guarantee {rep.guarantee:.3f}, "
          f"certificate {rep.certificate_ok}")

# %% [markdown]
# ## A small experiment grid as CSV

# %%
cfg = GridConfig(scenario_counts=[20], ks=[2, 5], s_incs=[0.5, 0.9], seeds=[0, 1], methods=["opt", "kmeans"])
print(rows_to_csv(run_grid(cfg)).splitlines()[0])
