import warnings

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings, strategies as st

from maxlewis import Activation, NeuronProblem, evaluate_guarantee, solve_constrained_neuron, solve_lp_regression
from maxlewis.errors import DegenerateConstraint, MismatchedLengths, RankDeficient
from maxlewis.regression import lp_norm_p, neuron_loss, neuron_loss_grad


def l1_regression_lp(A, y):
    """Exact l1 regression as a linear program: min sum t, -t <= A x - y <= t."""
    n, d = A.shape
    c = np.concatenate([np.zeros(d), np.ones(n)])
    A_ub = np.block([[A, -np.eye(n)], [-A, -np.eye(n)]])
    b_ub = np.concatenate([y, -y])
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * d + [(0, None)] * n)
    return res.x[:d], res.fun


class TestActivation:
    @pytest.mark.parametrize("kind", ["identity", "relu", "tanh"])
    def test_zero_and_lipschitz(self, kind, rng):
        f = Activation(kind)
        assert f(np.zeros(1))[0] == 0.0
        a, b = rng.normal(scale=3, size=(2, 1000))
        assert np.all(np.abs(f(a) - f(b)) <= f.L * np.abs(a - b) + 1e-15)

    def test_relu_subgradient_at_zero(self):
        assert Activation("relu").derivative(np.array([0.0]))[0] == 0.0

    def test_unknown(self):
        with pytest.raises(ValueError):
            Activation("sigmoid")


class TestLpRegression:
    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_interpolation(self, p, gaussian, rng):
        A = gaussian(30, 4)
        y = A @ rng.standard_normal(4)
        theta = solve_lp_regression(A, y, p)
        assert np.sum(np.abs(A @ theta - y) ** p) ** (1 / p) <= 1e-8

    def test_identity_p2(self):
        np.testing.assert_allclose(solve_lp_regression(np.eye(2), [3.0, 4.0], 2), [3.0, 4.0])

    def test_median(self):
        theta = solve_lp_regression(np.ones((3, 1)), [0.0, 0.0, 10.0], 1)
        assert abs(theta[0]) <= 1e-6

    def test_l1_matches_linear_program(self, gaussian, rng):
        A = gaussian(60, 4)
        y = A @ rng.standard_normal(4) + rng.standard_t(1.5, 60)
        _, lp_obj = l1_regression_lp(A, y)
        ours = lp_norm_p(A @ solve_lp_regression(A, y, 1.0) - y, 1.0)
        assert ours <= lp_obj * (1 + 1e-7)

    @pytest.mark.parametrize("p", [1.5, 3.0, 4.0])
    def test_matches_generic_minimiser(self, p, gaussian, rng):
        A = gaussian(50, 3)
        y = rng.standard_normal(50)
        ours = lp_norm_p(A @ solve_lp_regression(A, y, p) - y, p)
        ref = scipy.optimize.minimize(lambda t: lp_norm_p(A @ t - y, p), np.zeros(3), method="Nelder-Mead",
                                      options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        assert ours <= ref.fun * (1 + 1e-8)

    def test_errors(self):
        with pytest.raises(RankDeficient):
            solve_lp_regression(np.ones((4, 2)), np.ones(4), 1.5)
        with pytest.raises(MismatchedLengths):
            solve_lp_regression(np.eye(2), np.ones(3))
        with pytest.raises(ValueError):
            solve_lp_regression(np.eye(2), np.ones(2), 0.5)


class TestGradient:
    @pytest.mark.parametrize("kind", ["identity", "relu", "tanh"])
    @pytest.mark.parametrize("p", [2.0, 3.0])
    def test_central_differences(self, kind, p, gaussian, rng):
        X = gaussian(25, 4)
        y = rng.standard_normal(25)
        h = 1e-6
        checked = 0
        while checked < 20:
            theta = rng.standard_normal(4)
            if kind == "relu" and np.min(np.abs(X @ theta)) < 1e-3:
                continue
            _, g = neuron_loss_grad(X, y, theta, kind, p)
            fd = np.array([
                (neuron_loss(X, y, theta + h * e, kind, p) - neuron_loss(X, y, theta - h * e, kind, p)) / (2 * h)
                for e in np.eye(4)
            ])
            assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1.0)
            checked += 1


class TestNeuron:
    def test_reduction_to_least_squares(self, gaussian, rng):
        X = gaussian(80, 5)
        y = X @ rng.standard_normal(5) + rng.standard_normal(80)
        sol = solve_constrained_neuron(NeuronProblem(X, y, "identity", 2, 0.25, False))
        ls = np.linalg.lstsq(X, y, rcond=None)[0]
        assert abs(sol.loss - lp_norm_p(X @ ls - y, 2)) <= 1e-6 * lp_norm_p(y, 2)
        np.testing.assert_allclose(sol.theta, ls, atol=1e-6)

    def test_reduction_without_warm_start(self, gaussian, rng):
        X = gaussian(80, 5)
        y = X @ rng.standard_normal(5) + rng.standard_normal(80)
        sol = solve_constrained_neuron(NeuronProblem(X, y, "identity", 2, 0.25, False), warm_start=False)
        ls_loss = lp_norm_p(X @ np.linalg.lstsq(X, y, rcond=None)[0] - y, 2)
        assert abs(sol.loss - ls_loss) <= 1e-6 * ls_loss
        assert sol.converged

    def test_zero_labels(self, gaussian):
        X = gaussian(20, 3)
        with pytest.warns(DegenerateConstraint):
            sol = solve_constrained_neuron(NeuronProblem(X, np.zeros(20), "relu", 2, 0.5, True))
        assert np.all(sol.theta == 0) and sol.loss == 0

    def test_planted_relu(self, gaussian, rng):
        X = gaussian(200, 6)
        y = np.maximum(X @ rng.standard_normal(6), 0)
        sol = solve_constrained_neuron(NeuronProblem(X, y, "relu", 2, 0.25, False), seed=1)
        assert sol.loss <= 1e-4 * lp_norm_p(y, 2)

    def test_planted_relu_without_warm_start(self, gaussian, rng):
        X = gaussian(200, 6)
        y = np.maximum(X @ rng.standard_normal(6), 0)
        sol = solve_constrained_neuron(NeuronProblem(X, y, "relu", 2, 0.25, False), seed=1, warm_start=False)
        assert sol.loss <= 1e-4 * lp_norm_p(y, 2)

    def test_monotone_trace(self, gaussian, rng):
        X = gaussian(100, 4)
        y = np.tanh(X @ rng.standard_normal(4)) + 0.1 * rng.standard_normal(100)
        sol = solve_constrained_neuron(NeuronProblem(X, y, "tanh", 3.0, 0.3, True), warm_start=False)
        assert np.all(np.diff(sol.trace) <= 0)
        assert len(sol.trace) > 1

    def test_constraint_binds_when_loss_decreases_forever(self, gaussian, rng):
        # saturating tanh against +-5 labels keeps improving as theta grows
        X = gaussian(60, 3)
        y = 5.0 * np.sign(X @ rng.standard_normal(3))
        sol = solve_constrained_neuron(NeuronProblem(X, y, "tanh", 2, 0.9, True))
        assert sol.feasible
        assert sol.constraint_lhs == pytest.approx(sol.constraint_rhs, rel=1e-6)

    def test_problem_validation(self):
        with pytest.raises(MismatchedLengths):
            NeuronProblem(np.eye(3), np.ones(2))
        with pytest.raises(ValueError):
            NeuronProblem(np.eye(2), np.ones(2), "relu", 2, 1.5, True)

    @settings(max_examples=20, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        kind=st.sampled_from(["identity", "relu", "tanh"]),
        p=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
        eps=st.floats(0.05, 0.95),
    )
    def test_feasibility(self, seed, kind, p, eps):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((40, 3))
        y = 4 * rng.standard_normal(40)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_constrained_neuron(NeuronProblem(X, y, kind, p, eps, True), seed, max_iters=300)
        assert sol.constraint_lhs <= sol.constraint_rhs * (1 + 1e-8)


class TestGuarantee:
    def test_same_point_at_most_one(self, gaussian, rng):
        A = gaussian(50, 3)
        y = rng.standard_normal(50)
        t = rng.standard_normal(3)
        for f in ["identity", "relu", "tanh"]:
            assert evaluate_guarantee(A, y, t, t, f, 2, 0.25) <= 1

    def test_ols_ratio(self, gaussian, rng):
        A = gaussian(50, 3)
        y = A @ rng.standard_normal(3) + rng.standard_normal(50)
        ts = np.linalg.lstsq(A, y, rcond=None)[0]
        opt = lp_norm_p(A @ ts - y, 2)
        expected = opt / (opt + 0.25 * lp_norm_p(A @ ts, 2))
        assert evaluate_guarantee(A, y, ts, ts, "identity", 2, 0.25) == pytest.approx(expected)

    def test_zero_denominator(self):
        A = np.eye(2)
        assert evaluate_guarantee(A, np.zeros(2), np.zeros(2), np.zeros(2), "relu", 2, 0.5) == 0.0
        assert evaluate_guarantee(A, np.zeros(2), np.ones(2), np.zeros(2), "relu", 2, 0.5) == np.inf
