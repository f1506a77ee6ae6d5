import numpy as np
import pytest

from socialdata_pricing.errors import NegativeDemand, NotHomogeneous
from socialdata_pricing.graph import SocialGraph, generate_er
from socialdata_pricing.model import MarketParams, build_matrices, check_assumption1
from socialdata_pricing.simultaneous import (
    check_homogeneous_slope, inverse_demand_prices, price_slope, revenue_is_concave, run_greedy,
    schedule_revenue, solve_simultaneous,
)
from socialdata_pricing.static import solve_static

from conftest import random_instance


def test_two_period_scalar(single):
    plan = solve_simultaneous(single, 2)
    np.testing.assert_allclose(plan.x_star, [1 / 6], rtol=1e-15)
    np.testing.assert_allclose(plan.prices[:, 0], [2 / 3, 1 / 3], rtol=1e-14)
    assert plan.revenue == pytest.approx(1 / 6, abs=1e-12)


def test_one_period_is_static(single):
    plan = solve_simultaneous(single, 1)
    static = solve_static(single)
    assert plan.x_star[0] == pytest.approx(0.25)
    assert plan.prices[0, 0] == pytest.approx(0.5)
    assert plan.revenue == pytest.approx(static.revenue, rel=1e-15)


@pytest.mark.parametrize("T", [1, 3, 7])
def test_decoupled_plan(T):
    a, b = np.array([1.0, 2.0, 0.5]), np.array([0.5, 1.5, 3.0])
    m = build_matrices(MarketParams(a, b, 0.0), np.zeros((3, 3)))
    plan = solve_simultaneous(m, T)
    np.testing.assert_allclose(plan.x_star, a / (2 * b * (T + 1)), rtol=1e-14)
    k = np.arange(1, T + 1)[:, None]
    np.testing.assert_allclose(plan.prices, a * (T - k + 1) / (T + 1), rtol=1e-13)
    Xi, Phi = price_slope(m, T)
    np.testing.assert_allclose(Xi, a, rtol=1e-14)
    np.testing.assert_allclose(Phi, -a, rtol=1e-14)


def test_slope_scalar(single):
    Xi, Phi = price_slope(single, 2)
    assert Xi[0] == pytest.approx(1.0) and Phi[0] == pytest.approx(-1.0)
    plan = solve_simultaneous(single, 2)
    assert np.diff(plan.prices[:, 0])[0] == pytest.approx(-1 / 3)


def test_prices_are_inverse_demand():
    m = random_instance(3, mu_g=1.0, c=1.0)
    plan = solve_simultaneous(m, 6, strict=False)
    schedule = np.tile(plan.x_star, (6, 1))
    np.testing.assert_allclose(inverse_demand_prices(m, schedule), plan.prices, atol=1e-12)
    assert plan.revenue == pytest.approx(schedule_revenue(m, schedule), rel=1e-12)


def test_plan_structure():
    m = random_instance(4, mu_g=1.0, c=1.0)
    T = 9
    plan = solve_simultaneous(m, T, strict=False)
    assert plan.prices.shape == (T, m.n)
    second = np.diff(plan.prices, n=2, axis=0)
    assert np.abs(second).max() < 1e-10
    np.testing.assert_allclose((T + 1) * np.diff(plan.prices, axis=0), np.tile(plan.Phi, (T - 1, 1)), atol=1e-10)


def test_gradient_vanishes_at_plan():
    m = random_instance(6, n=4, mu_g=1.0, c=1.0)
    T = 3
    schedule = np.tile(solve_simultaneous(m, T, strict=False).x_star, (T, 1))
    h = 1e-6
    grad = np.zeros_like(schedule)
    for idx in np.ndindex(schedule.shape):
        up, dn = schedule.copy(), schedule.copy()
        up[idx] += h
        dn[idx] -= h
        grad[idx] = (schedule_revenue(m, up) - schedule_revenue(m, dn)) / (2 * h)
    assert np.abs(grad).max() < 1e-8


def test_negative_demand_raises():
    m = build_matrices(MarketParams([10.0, 0.1], [1.0, 1.0], 5.0), np.zeros((2, 2)))
    with pytest.raises(NegativeDemand):
        solve_simultaneous(m, 3)
    assert solve_simultaneous(m, 3, strict=False).revenue > 0


def test_horizon_validation(single):
    with pytest.raises(ValueError):
        solve_simultaneous(single, 0)
    with pytest.raises(ValueError):
        run_greedy(single, 0)


def test_homogeneous_slope_examples(single):
    assert check_homogeneous_slope(single, 4)
    g = SocialGraph(np.array([[0, 0.3, 0.2], [0.3, 0, 0.4], [0.2, 0.4, 0]]))
    m3 = build_matrices(MarketParams.homogeneous(3, 1.0, 1.0, 0.0), g)
    assert check_assumption1(m3.params, g).assumption1_ok
    assert np.all(price_slope(m3, 5)[1] < 0)
    for seed in range(20):
        graph = generate_er(5, 0.8, 8.0, seed)
        params = MarketParams.homogeneous(5, 1.0, 20.0, 10.0)
        if check_assumption1(params, graph).assumption1_ok:
            assert check_homogeneous_slope(build_matrices(params, graph), 50)
            break
    else:
        pytest.fail("no admissible homogeneous instance")


def test_homogeneous_precondition():
    m = build_matrices(MarketParams([1.0, 1.0], [1.0, 2.0], 0.0), np.zeros((2, 2)))
    with pytest.raises(NotHomogeneous):
        check_homogeneous_slope(m, 2)


def test_concavity_check(single):
    assert revenue_is_concave(single, 1) and revenue_is_concave(single, 5)
    # strong ties break concavity of long-horizon revenue
    g = SocialGraph(np.array([[0.0, 3.5], [3.5, 0.0]]))
    m = build_matrices(MarketParams.homogeneous(2, 1.0, 1.0, 0.0), g)
    assert not revenue_is_concave(m, 10)


def test_greedy_scalar(single):
    traj = run_greedy(single, 2)
    np.testing.assert_allclose(traj.x[:, 0], [0.25, 0.125])
    np.testing.assert_allclose(traj.p[:, 0], [0.5, 0.25])
    assert traj.total_revenue == pytest.approx(0.15625)
    assert traj.total_revenue < solve_simultaneous(single, 2).revenue


def test_greedy_decoupled_halving():
    a, b = np.array([1.0, 3.0]), np.array([0.5, 2.0])
    m = build_matrices(MarketParams(a, b, 0.0), np.zeros((2, 2)))
    traj = run_greedy(m, 6)
    expected = (a / (4 * b)) * 0.5 ** np.arange(6)[:, None]
    np.testing.assert_allclose(traj.x, expected, rtol=1e-14)


def test_greedy_first_step_is_one_period_plan():
    m = random_instance(11, mu_g=1.0, c=1.0)
    plan = solve_simultaneous(m, 1, strict=False)
    traj = run_greedy(m, 1)
    if np.all(plan.x_star >= 0):
        np.testing.assert_allclose(traj.x[0], plan.x_star, rtol=1e-12)
