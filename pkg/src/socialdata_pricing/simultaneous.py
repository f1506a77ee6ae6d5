"""Finite-horizon simultaneous pricing and its one-period-lookahead variant.

Users respond within a period only to demand accumulated in earlier
periods, with inverse demand

    p_i(k) = a_i + sum_j g_ij y_j(k-1) - c sum_j y_j(k-1) - 2 b_i y_i(k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import NegativeDemand, NotHomogeneous
from .model import ModelMatrices
from .sequential import DemandTrajectory, PriceConvention

NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class SimuPlan:
    horizon: int
    x_star: np.ndarray
    prices: np.ndarray  # (T, N)
    Xi: np.ndarray
    Phi: np.ndarray
    revenue: float
    negative_price_periods: tuple = ()

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "x_star": self.x_star.tolist(),
            "prices": self.prices.tolist(),
            "Xi": self.Xi.tolist(),
            "Phi": self.Phi.tolist(),
            "revenue": self.revenue,
            "negative_price_periods": [list(kv) for kv in self.negative_price_periods],
        }


def _coupling(matrices: ModelMatrices) -> np.ndarray:
    return matrices.G - matrices.C_mat


def inverse_demand_prices(matrices: ModelMatrices, schedule) -> np.ndarray:
    """Prices that make each row of ``schedule`` (T, N) the users' response."""
    X = np.atleast_2d(np.asarray(schedule, dtype=float))
    Y = np.cumsum(X, axis=0)
    Y_prev = np.vstack([np.zeros(X.shape[1]), Y[:-1]])
    return matrices.a + Y_prev @ _coupling(matrices).T - 2.0 * matrices.b * Y


def schedule_revenue(matrices: ModelMatrices, schedule) -> float:
    """Total revenue of a demand schedule priced by the inverse demand."""
    X = np.atleast_2d(np.asarray(schedule, dtype=float))
    return float(np.sum(inverse_demand_prices(matrices, X) * X))


def price_slope(matrices: ModelMatrices, T: int) -> tuple[np.ndarray, np.ndarray]:
    """(Xi, Phi): prices move by Phi / (T + 1) per period."""
    if T < 1:
        raise ValueError("horizon must be at least 1")
    n = matrices.n
    K = _coupling(matrices)
    lam = 2.0 * matrices.b
    Xi = numerics.solve_linear(np.eye(n) - (T - 1) / (T + 1) * (K / lam[None, :]), matrices.a)
    Phi = K @ (Xi / lam) - Xi
    return Xi, Phi


def solve_simultaneous(matrices: ModelMatrices, T: int, *, strict: bool = True) -> SimuPlan:
    """Revenue-maximizing plan over ``T`` periods.

    Demand is constant, x* = ((T+1) Lambda - (T-1)(G - C))^-1 a, and the price
    in period k is a + (k-1)(G - C) x* - k Lambda x*, affine in k.
    """
    if T < 1:
        raise ValueError("horizon must be at least 1")
    K = _coupling(matrices)
    operator = (T + 1) * matrices.Lambda - (T - 1) * K
    x = numerics.solve_linear(operator, matrices.a)
    if strict and np.any(x < -NEGATIVE_TOL):
        users = np.flatnonzero(x < -NEGATIVE_TOL).tolist()
        raise NegativeDemand(f"horizon-{T} demand negative for users {users}")
    k = np.arange(1, T + 1)[:, None]
    prices = matrices.a + (k - 1) * (K @ x) - k * (matrices.Lambda @ x)
    Xi, Phi = price_slope(matrices, T)
    negative = tuple((int(t) + 1, int(i)) for t, i in zip(*np.nonzero(prices < 0)))
    revenue = float(np.sum(prices @ x))
    return SimuPlan(T, x, prices, Xi, Phi, revenue, negative)


def check_homogeneous_slope(matrices: ModelMatrices, T: int) -> bool:
    """True when every user's price falls over the horizon (identical a_i, b_i required)."""
    for name, v in (("a", matrices.a), ("b", matrices.b)):
        if np.ptp(v) > 1e-12:
            raise NotHomogeneous(f"coefficients {name}_i are not identical")
    _, Phi = price_slope(matrices, T)
    return bool(np.all(Phi < 0))


def revenue_is_concave(matrices: ModelMatrices, T: int) -> bool:
    """Whether total revenue is strictly concave in the (T x N) demand schedule.

    Its Hessian is I_T (x) (C - Lambda - G) + J_T (x) (G - C - Lambda), with
    eigen-blocks -(Lambda + G - C) and -((T+1) Lambda - (T-1)(G - C)). When
    both are negative definite the stationary plan is the global maximum.
    """
    K = _coupling(matrices)
    blocks = [matrices.Lambda + K]
    if T > 1:
        blocks.append((T + 1) * matrices.Lambda - (T - 1) * K)
    else:
        blocks = [2.0 * matrices.Lambda]
    return all(np.linalg.eigvalsh((B + B.T) / 2).min() > 0 for B in blocks)


def run_greedy(matrices: ModelMatrices, K: int) -> DemandTrajectory:
    """Myopic operator: maximizes only the current period's revenue each time."""
    if K < 1:
        raise ValueError("K must be at least 1")
    n = matrices.n
    coupling = _coupling(matrices)
    b = matrices.b
    X = np.empty((K, n))
    Y = np.empty((K, n))
    Pr = np.empty((K, n))
    y = np.zeros(n)
    for k in range(K):
        a_hat = matrices.a + coupling @ y - 2.0 * b * y
        x = np.maximum(0.0, a_hat / (4.0 * b))
        p = a_hat - 2.0 * b * x
        y = y + x
        X[k], Y[k], Pr[k] = x, y, p
    revenue = np.einsum("kn,kn->k", Pr, X)
    return DemandTrajectory(X, Y, Pr, revenue, (), PriceConvention.GREEDY)
