# %% [markdown]
# # Response matrices on disk
#
# A response matrix holds integers ``0..M``; zero means "no response".
# Subjects and items with no responses are dropped on load, and the kept
# row and column ids travel with the matrix.

# %%
import tempfile
from pathlib import Path

import numpy as np

from gomspectral import read_matrix, validate_response_matrix, write_matrix

raw = np.array([[1, 0, 4], [0, 0, 0], [2, 3, 0], [0, 1, 1]])
r = validate_response_matrix(raw, m_max=4)
print("shape", r.shape, "dropped rows", r.dropped_rows, "kept rows", r.row_ids)

# %% [markdown]
# Round trip through CSV and Matrix Market.  Sparse and dense inputs give
# the same matrix.

# %%
tmp = Path(tempfile.mkdtemp())
write_matrix(r, tmp / "r.csv", format="csv")
write_matrix(r, tmp / "r.mtx", format="matrix-market")
a = read_matrix(tmp / "r.csv", "csv", m_max=4)
b = read_matrix(tmp / "r.mtx", "matrix-market", m_max=4)
print(np.array_equal(a.dense(), b.dense()))

# %% [markdown]
# Ratings logs such as MovieLens ``u.data`` are (subject, item, value)
# records with 1-based labels.

# %%
(tmp / "u.data").write_text("1\t1\t5\t881250949\n1\t3\t2\t881250950\n2\t2\t4\t891717742\n")
print(read_matrix(tmp / "u.data", "triplets", m_max=5).dense())
