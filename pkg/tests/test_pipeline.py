import numpy as np
import pytest

from maxlewis import (
    ArrayOracle,
    FileOracle,
    LewisConfig,
    MultiRepDataset,
    brute_force_opt,
    evaluate_guarantee,
    run_one_shot,
)
from maxlewis.errors import MismatchedLengths, QueryBudgetInfeasible
from maxlewis.pipeline import shared_sampler


def linear_pool(rng, n_u=200, d=4, k=1, noise=0.1):
    U = rng.standard_normal((n_u, d))
    y = U @ rng.standard_normal(d) + noise * rng.standard_normal(n_u)
    reps = [U] + [U @ rng.standard_normal((d, d)) for _ in range(k - 1)]
    return reps, y


class TestDataset:
    def test_shapes(self, rng):
        data = MultiRepDataset([rng.standard_normal((30, 3)), rng.standard_normal((30, 5))],
                               [np.ones((2, 3)), np.ones((2, 5))], [1.0, 2.0])
        assert (data.k, data.n_u, data.n_l) == (2, 30, 2)
        assert data.full_matrix(1).shape == (32, 5)

    def test_mismatch(self, rng):
        with pytest.raises(MismatchedLengths):
            MultiRepDataset([rng.standard_normal((30, 3)), rng.standard_normal((31, 3))])
        with pytest.raises(MismatchedLengths):
            MultiRepDataset([rng.standard_normal((30, 3))], [np.ones((2, 3))], [1.0])


class TestOracles:
    def test_each_index_charged_once(self):
        o = ArrayOracle([5.0, 6.0, 7.0])
        for q in [2, 0, 2, 2, 0]:
            o.query(q)
        assert o.query_count == 2 and o.order == [2, 0]

    def test_file_oracle_audit(self, tmp_path):
        labels = tmp_path / "labels.txt"
        labels.write_text("1.5\n2.5\n\n3.5\n")
        audit = tmp_path / "audit.csv"
        o = FileOracle(labels, audit)
        assert o.query(2) == 3.5 and o.query(0) == 1.5 and o.query(2) == 3.5
        assert audit.read_text() == "2,3.5\n0,1.5\n"
        with pytest.raises(IndexError):
            o.query(3)


class TestOneShot:
    def test_full_budget_recovers_optimum(self, rng):
        reps, y = linear_pool(rng)
        res = run_one_shot(MultiRepDataset(reps), ArrayOracle(y), 200, 0.25, 2.0, "identity",
                           seed=3, constrained=False)
        ts, _ = brute_force_opt(reps[0], y, "identity", 2)
        ratio = evaluate_guarantee(reps[0], y, res.solutions[0].theta, ts, "identity", 2, 0.25)
        assert ratio <= 1.05

    def test_queries_equal_tau(self, rng):
        reps, y = linear_pool(rng, k=2)
        oracle = ArrayOracle(y)
        res = run_one_shot(MultiRepDataset(reps), oracle, 40, 0.25, seed=1)
        assert res.plan.m > 40
        assert oracle.query_count == res.queries_used == res.plan.n_distinct == 40
        assert oracle.order == list(res.plan.distinct)

    def test_identical_models_identical_outputs(self, rng):
        reps, y = linear_pool(rng)
        res = run_one_shot(MultiRepDataset(reps * 3), ArrayOracle(y), 30, 0.25, f="relu", seed=2)
        assert res.weights[0].w.tobytes() == res.weights[2].w.tobytes()
        np.testing.assert_allclose(res.distribution.probs, res.weights[0].w / res.T)
        for sol in res.solutions[1:]:
            assert sol.theta.tobytes() == res.solutions[0].theta.tobytes()

    def test_plan_ignores_model_order(self, rng):
        reps, y = linear_pool(rng, k=3)
        a = run_one_shot(MultiRepDataset(reps), ArrayOracle(y), 25, 0.25, seed=9)
        b = run_one_shot(MultiRepDataset(reps[::-1]), ArrayOracle(y), 25, 0.25, seed=9)
        assert a.plan == b.plan
        assert a.T == b.T

    def test_labeled_rows_lead(self, rng):
        reps, y = linear_pool(rng, n_u=100)
        L = rng.standard_normal((5, 4))
        data = MultiRepDataset(reps, [L], np.arange(5.0))
        res = run_one_shot(data, ArrayOracle(y), 20, 0.25, seed=0)
        assert res.S.indices[:5].tolist() == list(range(5))
        assert np.all(res.S.scales[:5] == 1.0)
        assert res.y[:5].tolist() == list(np.arange(5.0))

    def test_advised_sample_size(self, rng):
        reps, y = linear_pool(rng)
        res = run_one_shot(MultiRepDataset(reps), ArrayOracle(y), 10, 0.5, seed=0, constant_c=1e-3)
        assert res.advised_m is not None and res.advised_m >= 1

    def test_budget_too_large(self, rng):
        reps, y = linear_pool(rng, n_u=50)
        with pytest.raises(QueryBudgetInfeasible):
            run_one_shot(MultiRepDataset(reps), ArrayOracle(y), 51, 0.25)

    def test_deterministic(self, rng):
        reps, y = linear_pool(rng, k=2)
        runs = [run_one_shot(MultiRepDataset(reps), ArrayOracle(y), 30, 0.25, f="tanh", seed=5)
                for _ in range(2)]
        assert runs[0].plan == runs[1].plan
        for s, t in zip(runs[0].solutions, runs[1].solutions):
            assert s.theta.tobytes() == t.theta.tobytes()

    def test_lewis_config_p_follows_argument(self, rng):
        reps, y = linear_pool(rng)
        res = run_one_shot(MultiRepDataset(reps), ArrayOracle(y), 20, 0.25, p=1.5,
                           cfg=LewisConfig(p=2.0), seed=0)
        assert res.weights[0].p == 1.5


class TestSchemes:
    def test_full_is_identity(self, rng):
        reps, _ = linear_pool(rng, n_u=40)
        from maxlewis import lewis_weights
        plan, S, _ = shared_sampler([lewis_weights(reps[0])], 3, 10, 2.0, 0, "full")
        assert len(S) == 43 and np.all(S.scales == 1) and plan.n_distinct == 40

    def test_bernoulli_scales(self, rng):
        reps, _ = linear_pool(rng, n_u=300)
        from maxlewis import lewis_weights
        w = lewis_weights(reps[0])
        plan, S, dist = shared_sampler([w], 0, 30, 2.0, 4, "bernoulli")
        beta = 30 / dist.total
        probs = np.minimum(beta * w.w, 1.0)
        np.testing.assert_allclose(S.scales, probs[S.indices] ** -0.5)
        assert plan.n_distinct == len(S)

    def test_unknown_scheme(self, rng):
        from maxlewis import lewis_weights
        with pytest.raises(ValueError):
            shared_sampler([lewis_weights(rng.standard_normal((20, 2)))], 0, 5, 2.0, 0, "stratified")
