"""Regenerate the small data set behind ``smoke.cfg`` (k = 1, n_u = 300, d = 5).

    python demos/smoke/make_data.py
"""

from pathlib import Path

from maxlewis.io import vector_text, write_matrix
from maxlewis.sampling import make_rng

here = Path(__file__).parent
rng = make_rng(2024)
n_l, n_u, d = 10, 300, 5
X = rng.standard_normal((n_l + n_u, d))
theta = rng.standard_normal(d)
y = X @ theta + 0.1 * rng.standard_normal(n_l + n_u)

write_matrix(here / "labeled.csv", X[:n_l])
write_matrix(here / "unlabeled.csv", X[n_l:])
write_matrix(here / "unlabeled.bin", X[n_l:], "binary")
(here / "labeled_labels.txt").write_text(vector_text(y[:n_l]))
(here / "labels.txt").write_text(vector_text(y[n_l:]))
