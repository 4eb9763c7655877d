# %% [markdown]
# # Choosing K by fuzzy modularity
#
# For each candidate ``k`` the estimator is fitted and the soft partition
# is scored on ``A = R R'``.  The ``k`` with the highest score wins.

# %%
from gomspectral import sample_gom, select_k

r = sample_gom(800, 200, 3, 4, 1.0, seed=2).responses()
curve = select_k(r, "CRSC", 1, 6)
for k, q in zip(curve.k_values, curve.q_values):
    print(k, f"{q:.4f}", "<-" if k == curve.argmax_k else "")
