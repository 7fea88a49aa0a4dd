# %% [markdown]
# # Approximation guarantees of clustered scenarios
#
# A cluster of positive cost vectors is replaced by one representative `r`.
# The pair `(alpha, beta)` with `s <= alpha r` and `r <= beta s` for every
# member bounds how far the reduced problem can drift. This notebook walks
# through the vector case, the geometric grid and the matrix analogue.

# %%
import numpy as np

from scenred import clustering as cl
from scenred import matrix_clustering as mc
from scenred.scenarios import PerturbationSpec, generate_perturbed

# %% [markdown]
# ## One cluster in the plane
#
# The corners of `[1,3] x [1,2]` form one cluster. Its best product is the
# largest corner ratio, 3. Every point between the lines `y = x` and
# `y = (2/3) x` reaches it, and points outside that wedge do worse.

# %%
corners = np.array([[1.0, 1.0], [3.0, 1.0], [1.0, 2.0], [3.0, 2.0]])
labels = np.zeros(4, dtype=int)
for rep in ([1.0, 1.0], [2.0, 1.5], [3.0, 2.0], [3.0, 1.0], [1.0, 2.0]):
    a, b = cl.guarantee_of(corners, labels, [rep])
    print(f"representative {rep}: alpha={a:.3f} beta={b:.3f} product={a * b:.3f}")

# %% [markdown]
# ## Geometric splitting
#
# Splitting `[1, 16]` into four cells at geometric breakpoints gives ratio 2 per cell.

# %%
res = cl.hyperrect_partition(box=([1.0], [16.0]), splits=(4,))
print(res.breakpoints[0], res.bound)

# %% [markdown]
# ## Optimal partition, k-means and the grid on perturbed scenarios

# %%
S = generate_perturbed(PerturbationSpec(np.array([4.0, 2.0, 7.0]), 0.6, 40, seed=3))
for K in (1, 2, 4, 8):
    opt = cl.optimal_partition(S, K)
    km = cl.kmeans_partition(S, K, seed=0)
    hr = cl.hyperrect_partition(S, cl.choose_splits(S, K))
    print(f"K={K}: opt {opt.guarantee:.4f}  kmeans {km.guarantee:.4f}  "
          f"grid {hr.partition.guarantee:.4f} (a-priori {hr.bound:.4f}, {hr.partition.K} cells used)")

# %% [markdown]
# ## Matrix scenarios
#
# For covariance matrices the eigenvalue bound certifies the Loewner sandwich.
# It need not be tight: `D = diag(1, 4)` represents itself, yet the bound reports 4.

# %%
D = np.diag([1.0, 4.0])
print(mc.eig_guarantee([D], D))
I = np.eye(2)
P = mc.optimal_matrix_partition([I, 1.1 * I, 5 * I], 2)
print(P.assignment, P.guarantee)
