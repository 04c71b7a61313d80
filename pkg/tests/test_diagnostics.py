import numpy as np
import pytest

from maxlewis import (
    class_imbalance,
    coverage_kappa,
    lewis_weights,
    max_weight_sum_curve,
    synthetic_backbones,
)
from maxlewis.diagnostics import curve_csv, kappa_csv, top_indices
from maxlewis.errors import AbsentClass, EmptyLabels


class TestTopIndices:
    def test_ties_prefer_small_index(self):
        assert top_indices(np.array([1.0, 2.0, 2.0, 0.5]), 2).tolist() == [1, 2]
        assert top_indices(np.ones(5), 3).tolist() == [0, 1, 2]


class TestKappa:
    def test_full_set_is_one(self, rng):
        W = rng.random((4, 30))
        assert coverage_kappa(W, 100) == 1.0

    def test_identical_is_one(self, rng):
        w = rng.random(50)
        for t in (1, 10, 37, 50):
            assert coverage_kappa([w, w, w], t) == 1.0

    def test_reversed_rankings(self):
        a = np.arange(1.0, 11.0)
        b = a[::-1].copy()
        assert coverage_kappa([a, b], 50) == 0.5

    def test_matches_brute_force_sets(self, rng):
        for _ in range(20):
            W = rng.random((3, 12))
            t = float(rng.integers(5, 100))
            size = max(1, int(np.floor(t / 100 * 12)))
            mx = W.max(axis=0)
            def top(v):
                return set(sorted(range(12), key=lambda i: (-v[i], i))[:size])
            expected = np.mean([len(top(mx) & top(w)) / size for w in W])
            assert coverage_kappa(W, t) == pytest.approx(expected)

    def test_range(self):
        with pytest.raises(ValueError):
            coverage_kappa([np.ones(3)], 0)


class TestCurve:
    def test_disjoint_supports(self):
        d, n, k = 2, 12, 8
        W = []
        for j in range(k):
            w = np.zeros(n)
            w[(2 * j) % n:(2 * j) % n + d] = 1.0
            W.append(w)
        pts = max_weight_sum_curve(W)
        assert [p.T for p in pts] == [float(min(2 * kk, 12)) for kk in range(1, k + 1)]
        assert [p.upper_bound for p in pts] == [float(min(2 * kk, 12)) for kk in range(1, k + 1)]

    def test_monotone_and_bounded(self, rng):
        mats = [rng.standard_normal((80, 3)) for _ in range(6)]
        pts = max_weight_sum_curve([lewis_weights(M) for M in mats])
        Ts = [p.T for p in pts]
        assert all(b >= a for a, b in zip(Ts, Ts[1:]))
        assert pts[0].T == pytest.approx(3.0)
        assert all(p.T <= p.upper_bound + 1e-9 for p in pts)

    def test_csv(self):
        text = curve_csv(max_weight_sum_curve([np.array([0.5, 0.5])]))
        assert text.splitlines() == ["k,T,upper_bound", "1,1.0,1.0"]
        assert kappa_csv([(10.0, 0.5)]).splitlines() == ["t,kappa", "10.0,0.5"]


class TestImbalance:
    def test_basic(self):
        assert class_imbalance([0, 0, 0, 1]) == 3.0
        assert class_imbalance(["a", "b"]) == 1.0

    def test_universe(self):
        with pytest.raises(AbsentClass):
            class_imbalance([0, 0, 1], class_universe=[0, 1, 2])
        assert class_imbalance([0, 0, 1, 2], class_universe=[0, 1, 2]) == 2.0

    def test_empty(self):
        with pytest.raises(EmptyLabels):
            class_imbalance([])


class TestBackbones:
    def test_deterministic(self):
        a = synthetic_backbones(100, 4, 3, 0.5, seed=11)
        b = synthetic_backbones(100, 4, 3, 0.5, seed=11)
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a, b))

    def test_perfect_correlation_collapses(self):
        mats = synthetic_backbones(200, 5, 4, 1.0, seed=0, rotate=False)
        assert all(np.array_equal(mats[0], M) for M in mats)
        pts = max_weight_sum_curve([lewis_weights(M) for M in mats])
        assert pts[-1].T == pytest.approx(5.0, abs=1e-8)

    def test_independent_models_grow(self):
        mats = synthetic_backbones(300, 4, 6, 0.0, seed=1)
        Ts = [p.T for p in max_weight_sum_curve([lewis_weights(M) for M in mats])]
        assert all(b > a for a, b in zip(Ts, Ts[1:]))

    def test_correlation_slows_growth(self):
        def final_T(c):
            mats = synthetic_backbones(1000, 8, 10, c, seed=2)
            return max_weight_sum_curve([lewis_weights(M) for M in mats])[-1].T
        assert final_T(0.95) < final_T(0.0)
