import numpy as np
import pytest

from socialdata_pricing.errors import NegativeDemand
from socialdata_pricing.model import MarketParams, build_matrices
from socialdata_pricing.static import solve_static

from conftest import pair_graph


def test_scalar(single):
    out = solve_static(single)
    assert out.x_hat[0] == pytest.approx(0.25)
    assert out.p_hat[0] == pytest.approx(0.5)
    assert out.revenue == pytest.approx(0.125)
    assert out.welfare == pytest.approx(0.0625)


def test_pair(pair):
    out = solve_static(pair)
    np.testing.assert_allclose(out.x_hat, [1 / 4.1] * 2, rtol=1e-14)
    np.testing.assert_allclose(out.p_hat, [2.2 / 4.1] * 2, rtol=1e-14)
    assert out.x_hat[0] == pytest.approx(0.243902, abs=1e-6)
    assert out.p_hat[0] == pytest.approx(0.536585, abs=1e-6)
    assert out.revenue == pytest.approx(0.261749, abs=1e-6)


def _own_response(m, i, price, others):
    # user i's demand at its price with every other user's demand held fixed
    coupling = (m.G[i] - m.c) @ others - (m.G[i, i] - m.c) * others[i]
    return (m.a[i] - price + coupling) / (2 * m.b[i] + m.c)


def test_pair_grid_search_per_user(pair):
    # the static prices are an equilibrium of per-user price setting
    out = solve_static(pair)
    grid = np.linspace(0.3, 0.8, 50001)
    for i in range(2):
        revenue = grid * _own_response(pair, i, grid, out.x_hat)
        assert grid[np.argmax(revenue)] == pytest.approx(out.p_hat[i], abs=2e-5)


def test_joint_pricing_is_not_the_static_point(pair):
    # a joint price search over both users earns more: the static point is an
    # equilibrium, not a joint optimum
    x_joint = np.linalg.solve(2 * pair.P, pair.a)
    joint = float((pair.a - pair.P @ x_joint) @ x_joint)
    assert joint == pytest.approx(1 / 3.8, rel=1e-12)
    assert joint > solve_static(pair).revenue


def test_decoupled_closed_form():
    a = np.array([1.0, 2.5, 0.4])
    b = np.array([0.7, 2.0, 5.0])
    out = solve_static(build_matrices(MarketParams(a, b, 0.0), np.zeros((3, 3))))
    np.testing.assert_allclose(out.x_hat, a / (4 * b), rtol=1e-14)
    np.testing.assert_allclose(out.p_hat, a / 2, rtol=1e-14)
    assert out.revenue == pytest.approx(np.sum(a**2 / (8 * b)), rel=1e-14)


def test_negative_demand():
    # a large gap in intrinsic value with heavy congestion pushes one user below zero
    m = build_matrices(MarketParams([10.0, 0.1], [1.0, 1.0], 5.0), np.zeros((2, 2)))
    with pytest.raises(NegativeDemand):
        solve_static(m)
    out = solve_static(m, strict=False)
    assert out.negative_demand
