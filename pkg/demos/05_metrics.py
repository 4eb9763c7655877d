# %% [markdown]
# # Error metrics
#
# Latent classes have no natural order, so errors are minimized over
# column permutations and the best permutation is reported.

# %%
import numpy as np

from gomspectral import ItemParams, MembershipMatrix, hamming_error, purity_proportions, relative_error

truth = MembershipMatrix([[1.0, 0.0], [0.3, 0.7], [0.5, 0.5]])
est = MembershipMatrix(truth.weights[:, ::-1])
err = hamming_error(est, truth)
print("Hamming", err.value, "permutation", err.permutation)

theta = ItemParams(np.array([[3.0, 1.0], [0.5, 2.0]]))
print("Relative", relative_error(ItemParams(theta.theta * 1.1), theta).value)

# %% [markdown]
# Purity: the share of highly pure (max weight >= 0.9) and highly mixed
# (max weight <= 0.6) subjects.

# %%
print(purity_proportions(truth))
