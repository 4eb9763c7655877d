# %% [markdown]
# # Finding the corners
#
# Successive projection finds the vertices of a simplex; the SVM-cone
# procedure finds the extreme rays of a cone.  Here both run on rows built
# as convex (or conic) mixtures of three known corners.

# %%
import numpy as np

from gomspectral import successive_projection, svm_cone

rng = np.random.default_rng(0)
corners = np.array([[1.0, 0.0, 0.0], [0.2, 1.0, 0.0], [0.1, 0.3, 1.0]])
w = rng.dirichlet(np.ones(3), size=200)
w[:3] = np.eye(3)  # the corners themselves are rows 0, 1, 2
points = w @ corners
print("simplex corners:", successive_projection(points, 3).indices)

# %%
cone = w @ corners
cone /= np.linalg.norm(cone, axis=1, keepdims=True)
print("cone rays:", sorted(svm_cone(cone, 3).indices))
