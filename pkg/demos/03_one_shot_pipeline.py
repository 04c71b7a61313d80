"""
One batch of labels for several neurons
=======================================

Five feature extractors share an unlabeled pool. We pick one set of rows,
pay for each distinct label once, then fit a ReLU neuron per extractor on
the reweighted sample and compare against a neuron fitted on every label.
"""

import numpy as np

from maxlewis import (
    ArrayOracle,
    MultiRepDataset,
    brute_force_opt,
    evaluate_guarantee,
    run_one_shot,
    synthetic_backbones,
)
from maxlewis.sampling import make_rng

n, d, k = 2000, 10, 5
eps = 0.25

mats = synthetic_backbones(n, d, k, correlation=0.95, seed=3)
rng = make_rng(4)
clean = np.maximum(mats[0] @ rng.standard_normal(d), 0)
y = clean + 0.05 * np.sqrt(np.mean(clean**2)) * rng.standard_normal(n)

oracle = ArrayOracle(y)
res = run_one_shot(MultiRepDataset(mats), oracle, tau=300, epsilon=eps, p=2.0, f="relu", seed=0)
print(f"T={res.T:.2f}  draws={res.plan.m}  labels paid for={oracle.query_count} of {n}")

for j, sol in enumerate(res.solutions):
    theta_star, opt = brute_force_opt(mats[j], y, "relu", 2.0, restarts=10, seed=0)
    ratio = evaluate_guarantee(mats[j], y, sol.theta, theta_star, "relu", 2.0, eps)
    print(f"model {j}: OPT with all labels={opt:9.3f}  guarantee ratio of the sampled fit={ratio:.4f}")
