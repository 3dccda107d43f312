import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial import cKDTree

from conftest import random_data, random_feasible_net, random_net
from sqlr.dataset import Dataset
from sqlr.network import (
    SieveNetwork,
    TrainConfig,
    forward,
    grad_mse,
    init_network,
    mse,
    partial_derivative,
    phi_hat,
    predict,
    project_constraints,
    project_l1,
    sigmoid,
    sigmoid_deriv_coeffs,
    sigmoid_mth_deriv,
    sup_derivative_bound,
    train,
)


def unit_net(alpha0=1.0, alpha1=2.0, gamma=(0.0, 0.0), gamma0=0.0, **kw):
    return SieveNetwork(alpha0, [alpha1], [list(gamma)], [gamma0], **kw)


def flat(net):
    return np.concatenate(([net.alpha0], net.alphas, net.gammas.ravel(), net.gamma0s))


def unflat(net, w):
    r, d = net.r, net.d
    return replace(
        net, alpha0=w[0], alphas=w[1 : 1 + r], gammas=w[1 + r : 1 + r + r * d].reshape(r, d), gamma0s=w[1 + r + r * d :]
    )


def fd_gradient(net, data, h=1e-5):
    w = flat(net)
    out = np.empty_like(w)
    for i in range(w.size):
        up, down = w.copy(), w.copy()
        up[i] += h
        down[i] -= h
        out[i] = (mse(unflat(net, up), data) - mse(unflat(net, down), data)) / (2 * h)
    return out


def flat_grad(g):
    return np.concatenate(([g.d_alpha0], g.d_alphas, g.d_gammas.ravel(), g.d_gamma0s))


class TestForward:
    def test_constant_hidden_unit(self):
        assert forward(unit_net(), [0.3, -0.7]) == 2.0

    def test_zero_network(self):
        assert forward(SieveNetwork.zeros(3, 2), [0.5, 0.5]) == 0.0

    def test_sigmoid_of_log3(self):
        net = unit_net(alpha0=0.0, alpha1=1.0, gamma=(1.0, 0.0))
        assert forward(net, [math.log(3), 0.0]) == pytest.approx(0.75, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward(unit_net(), [0.0, 0.0, 0.0])

    def test_output_bounded_by_v(self, rng):
        for _ in range(50):
            net = random_feasible_net(rng, 5, 3, 6.0, 4.0)
            x = rng.uniform(-5, 5, (200, 3))
            assert np.all(np.abs(predict(net, x)) <= 6.0 + 1e-12)

    def test_sigmoid_symmetry_and_saturation(self):
        z = np.linspace(-800, 800, 2001)
        s = sigmoid(z)
        np.testing.assert_allclose(s + sigmoid(-z), 1.0, atol=1e-15)
        assert np.all((s >= 0) & (s <= 1))

    def test_invalid_budgets(self):
        with pytest.raises(ValueError):
            unit_net(v_budget=4.0)
        with pytest.raises(ValueError):
            unit_net(m_budget=0.0)
        with pytest.raises(ValueError):
            SieveNetwork(np.nan, [1.0], [[0.0]], [0.0])


class TestMse:
    def test_zero_network(self):
        data = Dataset([[0.1], [0.2]], [1.0, -1.0])
        assert mse(SieveNetwork.zeros(2, 1), data) == 1.0

    def test_interpolation(self, rng):
        net = random_net(rng, 4, 3)
        x = rng.uniform(-1, 1, (10, 3))
        assert mse(net, Dataset(x, predict(net, x))) == 0.0

    def test_hand_value(self):
        data = Dataset([[0.2, 0.9], [-0.4, 0.0]], [3.0, 3.0])
        assert mse(unit_net(), data) == 1.0

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((0, 2)), np.zeros(0))


class TestGradient:
    def test_zero_residual(self):
        g = grad_mse(SieveNetwork.zeros(1, 1), Dataset([[0.0]], [0.0]))
        assert g.d_alpha0 == 0.0 and not np.any(flat_grad(g))

    def test_hand_derivatives(self):
        g = grad_mse(unit_net(alpha0=0.0, alpha1=0.0, gamma=(0.0,)), Dataset([[0.7]], [1.0]))
        assert g.d_alpha0 == -2.0
        assert g.d_alphas[0] == -1.0
        assert g.d_gammas[0, 0] == 0.0

    def test_matches_finite_differences(self, rng):
        worst = 0.0
        for _ in range(100):
            n, d, r = rng.integers(1, 21), rng.integers(1, 5), rng.integers(1, 6)
            net, data = random_net(rng, r, d), random_data(rng, n, d)
            exact = flat_grad(grad_mse(net, data))
            approx = fd_gradient(net, data)
            err = np.abs(exact - approx) / np.maximum(np.abs(approx), 1e-3)
            worst = max(worst, float(np.max(err)))
            np.testing.assert_allclose(exact, approx, rtol=1e-5, atol=1e-8)
        assert worst < 1e-5


class TestProjection:
    def test_feasible_unchanged(self):
        v = np.array([0.5, -0.2])
        out = project_l1(v, 1.0)
        assert np.array_equal(out, v)

    def test_soft_threshold(self):
        np.testing.assert_allclose(project_l1([3.0, 4.0], 1.0), [0.0, 1.0], atol=1e-15)

    def test_symmetric(self):
        np.testing.assert_allclose(project_l1([2.0, 2.0], 2.0), [1.0, 1.0], atol=1e-15)

    def test_errors(self):
        with pytest.raises(ValueError):
            project_l1([np.inf, 1.0], 1.0)
        with pytest.raises(ValueError):
            project_l1([1.0, 1.0], 0.0)

    def test_grid_oracle(self, rng):
        # every feasible point of a 401x401 grid on [-1, 1]^2 (the acceptance
        # suite uses 2001x2001)
        g = np.linspace(-1, 1, 401)
        gx, gy = np.meshgrid(g, g)
        pts = np.column_stack((gx.ravel(), gy.ravel()))
        pts = pts[np.abs(pts).sum(axis=1) <= 1 + 1e-12]
        tree = cKDTree(pts)
        v = rng.uniform(-3, 3, (200, 2))
        _, idx = tree.query(v)
        got = np.array([project_l1(p, 1.0) for p in v])
        assert np.max(np.abs(got - pts[idx])) <= 2 * (g[1] - g[0])

    @settings(max_examples=200, deadline=None)
    @given(
        arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e3, 1e3)),
        st.floats(1e-3, 1e3),
    )
    def test_feasible_and_idempotent(self, v, radius):
        p = project_l1(v, radius)
        assert np.abs(p).sum() <= radius * (1 + 1e-12) + 1e-12
        np.testing.assert_allclose(project_l1(p, radius), p, rtol=0, atol=1e-12 * radius)
        if np.abs(v).sum() <= radius:
            assert np.array_equal(p, v)
        # a projection never moves a coordinate across zero or away from it
        assert np.all(np.sign(p) * np.sign(v) >= 0)
        assert np.all(np.abs(p) <= np.abs(v))

    def test_project_constraints_feasible_unchanged(self, rng):
        net = random_feasible_net(rng, 4, 3, 10.0, 2.0)
        out = project_constraints(net)
        assert np.array_equal(flat(out), flat(net))

    def test_output_block_halved(self):
        net = SieveNetwork(5.0, [5.0, 5.0, 5.0], np.zeros((3, 2)), np.zeros(3), v_budget=10.0, m_budget=1.0)
        out = project_constraints(net)
        # every |alpha| is 5 > threshold 2.5, so each loses 2.5 and the norm is exactly V
        np.testing.assert_allclose([out.alpha0, *out.alphas], [2.5] * 4)
        assert out.output_norm() == pytest.approx(10.0, rel=1e-15)
        assert np.array_equal(out.gammas, net.gammas)

    def test_only_violating_unit_changes(self):
        gam = np.array([[0.2, 0.1], [1.5, 0.3], [-0.1, 0.0]])
        g0 = np.array([0.1, 0.2, 0.3])
        net = SieveNetwork(0.0, [1.0, 1.0, 1.0], gam, g0, v_budget=10.0, m_budget=1.0)
        out = project_constraints(net)
        block = project_l1(np.r_[g0[1], gam[1]], 1.0)
        np.testing.assert_array_equal(out.gammas[[0, 2]], gam[[0, 2]])
        np.testing.assert_array_equal(out.gamma0s[[0, 2]], g0[[0, 2]])
        np.testing.assert_allclose(np.r_[out.gamma0s[1], out.gammas[1]], block)
        assert out.is_feasible()

    def test_idempotent(self, rng):
        net = project_constraints(random_net(rng, 6, 4, scale=50.0, v_budget=20.0, m_budget=3.0))
        twice = project_constraints(net)
        np.testing.assert_allclose(flat(twice), flat(net), atol=1e-12)


class TestTrain:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(iterations=1, step_base=0.0)
        with pytest.raises(ValueError):
            TrainConfig(iterations=0)
        with pytest.raises(ValueError):
            TrainConfig(seed=-1)

    def test_step_schedule(self):
        cfg = TrainConfig(step_base=0.3)
        assert cfg.step(1) == pytest.approx(0.3 / math.log(math.e + 1))

    def test_stationary_start_is_kept(self):
        data = Dataset([[0.1], [0.5], [-0.3]], [2.0, 2.0, 2.0])
        init = SieveNetwork(2.0, [0.0, 0.0], np.zeros((2, 1)), np.zeros(2))
        net, loss = train(data, TrainConfig(iterations=50), init)
        assert loss == mse(init, data) == 0.0
        assert np.array_equal(flat(net), flat(init))

    def test_best_iterate_not_worse_than_zero_net(self, rng):
        data = Dataset(rng.uniform(-1, 1, (40, 2)), np.full(40, 3.0))
        init = SieveNetwork.zeros(3, 2)
        net, loss = train(data, TrainConfig(iterations=200, step_base=0.5), init)
        assert loss <= 9.0
        assert loss == mse(net, data)

    def test_learns_single_sigmoid(self, rng):
        x = rng.uniform(-1, 1, (50, 1))
        data = Dataset(x, sigmoid(x[:, 0]))
        init = init_network(4, 1, 0.5, seed=3)
        _, loss = train(data, TrainConfig(iterations=5000, step_base=0.1), init)
        assert loss < 1e-3

    def test_iterates_stay_feasible(self, rng):
        data = random_data(rng, 30, 3)
        data = Dataset(data.x, 50 * data.y)
        init = init_network(5, 3, 0.5, seed=1, v_budget=5.5, m_budget=0.8)
        bad = []

        def check(k, net):
            if not net.is_feasible(rtol=1e-12):
                bad.append(k)

        net, loss = train(data, TrainConfig(iterations=300, step_base=1.0), init, callback=check)
        assert not bad
        assert net.is_feasible()
        assert loss <= mse(init, data)

    def test_deterministic(self, rng):
        data = random_data(rng, 25, 3)
        init = init_network(4, 3, 0.5, seed=9)
        a, la = train(data, TrainConfig(iterations=100), init)
        b, lb = train(data, TrainConfig(iterations=100), init)
        assert la == lb
        assert np.array_equal(flat(a), flat(b))

    def test_last_iterate_without_tracking(self, rng):
        data = random_data(rng, 25, 2)
        init = init_network(3, 2, 0.5, seed=2)
        seen = []
        net, loss = train(data, TrainConfig(iterations=20, track_best=False), init,
                          callback=lambda k, w: seen.append(w))
        assert np.array_equal(flat(net), flat(seen[-1]))
        assert loss == mse(seen[-1], data)

    def test_rejects_infeasible_start(self):
        init = SieveNetwork(100.0, [0.0], [[0.0]], [0.0], v_budget=5.0)
        with pytest.raises(ValueError):
            train(Dataset([[0.0]], [1.0]), TrainConfig(iterations=1), init)

    def test_init_network_is_seeded(self):
        a, b = init_network(3, 2, 0.5, seed=4), init_network(3, 2, 0.5, seed=4)
        assert np.array_equal(flat(a), flat(b))
        assert np.all(np.abs(flat(a)) <= 0.5)
        assert not np.array_equal(flat(a), flat(init_network(3, 2, 0.5, seed=5)))


class TestSigmoidDerivatives:
    def test_coefficients(self):
        assert sigmoid_deriv_coeffs(1) == [1]
        assert sigmoid_deriv_coeffs(2) == [1, 1]
        assert sigmoid_deriv_coeffs(3) == [1, 4, 1]
        with pytest.raises(ValueError):
            sigmoid_deriv_coeffs(0)

    @pytest.mark.parametrize("m", range(1, 11))
    def test_coefficient_sum_is_factorial(self, m):
        assert sum(sigmoid_deriv_coeffs(m)) == math.factorial(m)

    def test_values_at_zero(self):
        assert sigmoid_mth_deriv(0.0, 0) == 0.5
        assert sigmoid_mth_deriv(0.0, 1) == 0.25
        assert sigmoid_mth_deriv(0.0, 2) == 0.0
        assert sigmoid_mth_deriv(0.0, 3) == -0.125

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
    def test_finite_differences(self, m):
        z = np.linspace(-6, 6, 61)
        h = 1e-5
        fd = (sigmoid_mth_deriv(z + h, m - 1) - sigmoid_mth_deriv(z - h, m - 1)) / (2 * h)
        np.testing.assert_allclose(sigmoid_mth_deriv(z, m), fd, atol=1e-5)


class TestPartialDerivative:
    def test_first_order_example(self):
        net = unit_net(alpha0=7.0, alpha1=2.0, gamma=(1.0, 0.0))
        assert partial_derivative(net, [0.0, 0.0], (1, 0)) == 0.5

    def test_zero_weight_coordinate(self, rng):
        net = random_net(rng, 4, 3)
        net = replace(net, gammas=np.column_stack((net.gammas[:, :2], np.zeros(4))))
        x = rng.uniform(-1, 1, 3)
        assert partial_derivative(net, x, (0, 0, 1)) == 0.0
        assert partial_derivative(net, x, (1, 1, 2)) == 0.0

    def test_second_order_example(self):
        net = unit_net(alpha0=7.0, alpha1=2.0, gamma=(1.0, 0.0))
        assert partial_derivative(net, [0.0, 0.0], (2, 0)) == 0.0

    def test_first_order_finite_differences(self, rng):
        h = 1e-5
        for _ in range(30):
            d = int(rng.integers(1, 5))
            net = random_net(rng, 5, d, scale=2.0)
            x = rng.uniform(-1, 1, d)
            for i in range(d):
                e = np.zeros(d)
                e[i] = h
                fd = (forward(net, x + e) - forward(net, x - e)) / (2 * h)
                beta = np.zeros(d, dtype=int)
                beta[i] = 1
                assert partial_derivative(net, x, beta) == pytest.approx(fd, abs=1e-5)

    def test_mixed_second_order_finite_differences(self, rng):
        h = 1e-4
        net = random_net(rng, 3, 2, scale=2.0)
        x = rng.uniform(-1, 1, 2)
        fd = (
            forward(net, x + [h, h]) - forward(net, x + [h, -h]) - forward(net, x + [-h, h]) + forward(net, x - [h, h])
        ) / (4 * h * h)
        assert partial_derivative(net, x, (1, 1)) == pytest.approx(fd, abs=1e-5)

    def test_invalid_multi_index(self):
        net = unit_net()
        with pytest.raises(ValueError):
            partial_derivative(net, [0.0, 0.0], (0, 0))
        with pytest.raises(ValueError):
            partial_derivative(net, [0.0, 0.0], (1,))
        with pytest.raises(ValueError):
            partial_derivative(net, [0.0, 0.0, 0.0], (1, 0))


class TestDerivativeBound:
    @pytest.mark.parametrize(
        "v,m_budget,m,expected",
        [(1000.0, 1.0, 0, 1000.0), (5.0, 2.0, 3, 240.0), (1000.0, 1000.0, 1, 1e6)],
    )
    def test_formula(self, v, m_budget, m, expected):
        net = SieveNetwork.zeros(1, 1, v_budget=v, m_budget=m_budget)
        assert sup_derivative_bound(net, m) == expected

    def test_overflow_is_an_error(self):
        with pytest.raises(OverflowError):
            sup_derivative_bound(SieveNetwork.zeros(1, 1, m_budget=1000.0), 200)

    def test_bound_holds(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 4))
            net = random_feasible_net(rng, 4, d, 6.0, 1.5)
            x = rng.uniform(-1, 1, (50, d))
            for beta in ([1] + [0] * (d - 1), [2] + [0] * (d - 1), [3] + [0] * (d - 1)):
                m = sum(beta)
                assert np.all(np.abs(partial_derivative(net, x, beta)) <= sup_derivative_bound(net, m))


class TestPhiHat:
    def test_irrelevant_feature(self, rng):
        net = random_net(rng, 3, 2)
        net = replace(net, gammas=np.column_stack((np.zeros(3), net.gammas[:, 1])))
        assert phi_hat(net, random_data(rng, 10, 2), [0]) == 0.0

    def test_single_point(self):
        net = unit_net(alpha0=0.0, alpha1=2.0, gamma=(1.0, 0.0))
        data = Dataset([[0.0, 0.0]], [0.0])
        assert phi_hat(net, data, [0]) == 0.25
        assert phi_hat(net, data, [0, 1]) == 0.25

    def test_matches_partial_derivatives(self, rng):
        net = random_net(rng, 4, 3)
        data = random_data(rng, 12, 3)
        direct = np.mean(
            [sum(partial_derivative(net, x, np.eye(3, dtype=int)[j]) ** 2 for j in (0, 2)) for x in data.x]
        )
        assert phi_hat(net, data, [0, 2]) == pytest.approx(direct, rel=1e-12)

    def test_errors(self, rng):
        net = random_net(rng, 2, 2)
        data = random_data(rng, 3, 2)
        with pytest.raises(ValueError):
            phi_hat(net, data, [])
        with pytest.raises(ValueError):
            phi_hat(net, data, [2])
