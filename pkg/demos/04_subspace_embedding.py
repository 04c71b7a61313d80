"""
Sampled rows preserve every norm at once
========================================

Draw m rows by leverage score and rescale them. For p = 2 the worst-case
distortion over the whole column space is an eigenvalue problem, so we can
watch it shrink as m grows. A random-direction search gives a lower bound
that also works for other p.
"""

import math

from maxlewis import (
    SamplingDistribution,
    build_sampling_matrix,
    draw_fixed,
    exact_distortion_p2,
    lewis_weights,
    monte_carlo_distortion,
)
from maxlewis.sampling import make_rng

n, d = 2000, 20
A = make_rng(5).standard_normal((n, d))
dist = SamplingDistribution(lewis_weights(A).w)

for m in (100, 300, 1000, math.ceil(40 * d * math.log(d))):
    S = build_sampling_matrix(draw_fixed(dist, m, seed=m), dist, 0, 2.0)
    exact = exact_distortion_p2(A, S).epsilon_hat
    probe = monte_carlo_distortion(A, S, 2.0, trials=2000, seed=0).epsilon_hat
    print(f"m={m:5d}  exact={exact:.3f}  random directions={probe:.3f}")

# p = 1 uses l1 Lewis weights and only has the lower bound
d1 = SamplingDistribution(lewis_weights(A, p=1.0).w)
for m in (300, 1000, 3000):
    S = build_sampling_matrix(draw_fixed(d1, m, seed=m), d1, 0, 1.0)
    print(f"p=1 m={m:5d}  random directions={monte_carlo_distortion(A, S, 1.0, 2000, 0).epsilon_hat:.3f}")
