"""
How many labels do k models need together?
===========================================

Every model sees the same instances through its own features. Sampling from
the elementwise maximum of their Lewis weights serves all of them at once,
and the cost is set by T, the sum of those maxima. T(1) is the rank d and
T(k) can never exceed min(k d, n), but correlated models stay far below it.
"""

from maxlewis import coverage_kappa, lewis_weights, max_weight_sum_curve, synthetic_backbones

n, d, k = 4000, 16, 50

for correlation in (0.0, 0.5, 0.9):
    mats = synthetic_backbones(n, d, k, correlation, seed=1)
    weights = [lewis_weights(M) for M in mats]
    curve = max_weight_sum_curve(weights)
    picks = [curve[i] for i in (0, 4, 9, 24, 49)]
    print(f"correlation {correlation}:")
    print("   " + "  ".join(f"T({pt.k})={pt.T:6.2f}" for pt in picks))
    print(f"   worst case at k={k}: {curve[-1].upper_bound:g}")
    # share of each model's heaviest rows that the max ranking keeps
    print("   kappa:", ", ".join(f"{t}%={coverage_kappa(weights, t):.2f}" for t in (10, 30, 50)))
