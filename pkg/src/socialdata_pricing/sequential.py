"""Sequential dynamic pricing: per-period demand, two price conventions,
infinite-horizon closed forms and the max-min fairness visiting order.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import AsymmetricTies, InvalidPosition, NegativeDemandWarning
from .model import ModelMatrices, cumulative_utilities

NEGATIVE_TOL = 1e-12


class PriceConvention(str, enum.Enum):
    # a^(k) - P x^(k): every user's current demand is priced in
    ANTICIPATORY = "anticipatory"
    # literal visiting-order price: only earlier-visited users' current demand counts
    STEP4 = "step4"
    # rolling one-period lookahead of the simultaneous scheme
    GREEDY = "greedy"


@dataclass(frozen=True)
class VisitOrder:
    order: tuple

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"visit order {order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int) -> "VisitOrder":
        return cls(tuple(range(n)))

    def positions(self) -> np.ndarray:
        pos = np.empty(len(self.order), dtype=int)
        pos[list(self.order)] = np.arange(len(self.order))
        return pos


@dataclass(frozen=True)
class Fixed:
    """Visit users in the same order every period (identity if not given)."""

    order: VisitOrder | None = None

    def first(self, n: int) -> VisitOrder:
        return self.order or VisitOrder.identity(n)

    def next(self, previous: VisitOrder, utilities: np.ndarray) -> VisitOrder:
        return previous


@dataclass(frozen=True)
class RoundRobinFair:
    """Max-min reordering: from period 2 on, the worst-off user is visited first.

    Users are sorted by ascending cumulative utility through the previous
    period; equal utilities keep ascending user index.
    """

    initial: VisitOrder | None = None

    def first(self, n: int) -> VisitOrder:
        return self.initial or VisitOrder.identity(n)

    def next(self, previous: VisitOrder, utilities: np.ndarray) -> VisitOrder:
        return VisitOrder(tuple(np.argsort(utilities, kind="stable").tolist()))


@dataclass(frozen=True)
class DemandTrajectory:
    x: np.ndarray  # (K, N) per-period demand
    y: np.ndarray  # (K, N) cumulative demand
    p: np.ndarray  # (K, N) prices
    per_period_revenue: np.ndarray  # (K,)
    orders: tuple
    convention: PriceConvention
    negative_demand_periods: tuple = ()

    @property
    def periods(self) -> int:
        return self.x.shape[0]

    @property
    def total_revenue(self) -> float:
        return float(self.per_period_revenue.sum())

    def payments(self, k: int | None = None) -> np.ndarray:
        """Per-user spend through period ``k`` (all periods by default)."""
        k = self.periods if k is None else k
        return (self.p[:k] * self.x[:k]).sum(axis=0)

    def to_dict(self) -> dict:
        return {
            "convention": self.convention.value,
            "periods": self.periods,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "p": self.p.tolist(),
            "per_period_revenue": self.per_period_revenue.tolist(),
            "total_revenue": self.total_revenue,
            "orders": [list(o.order) for o in self.orders],
            "negative_demand_periods": list(self.negative_demand_periods),
        }


def _transition_powers(matrices: ModelMatrices, k: int) -> np.ndarray:
    """a^(k) = T^(k-1) a by repeated application."""
    if k < 1:
        raise ValueError("periods are numbered from 1")
    a_k = np.array(matrices.a)
    for _ in range(k - 1):
        a_k = matrices.T_op @ a_k
    return a_k


def demand_step(matrices: ModelMatrices, k: int) -> np.ndarray:
    """Optimal demand in period ``k``: M^-1 T^(k-1) a."""
    x = matrices.M_inv @ _transition_powers(matrices, k)
    if np.any(x < -NEGATIVE_TOL):
        warnings.warn(f"negative demand in period {k}", NegativeDemandWarning, stacklevel=2)
    return x


def limit_demand(matrices: ModelMatrices) -> np.ndarray:
    return numerics.solve_linear(matrices.P, matrices.a)


def anticipatory_prices(matrices: ModelMatrices, k: int) -> np.ndarray:
    a_k = _transition_powers(matrices, k)
    return a_k - matrices.P @ (matrices.M_inv @ a_k)


def _check_symmetric(matrices: ModelMatrices) -> None:
    if not np.array_equal(matrices.G, matrices.G.T):
        raise AsymmetricTies("visiting-order prices need reciprocal ties (g_ij == g_ji)")


def step4_prices(matrices: ModelMatrices, order: VisitOrder, y_prev, x) -> np.ndarray:
    """Visiting-order prices for one period, given the state before it.

    p_i = a_i - 2 b_i (y_i + x_i) + sum_j g_ij y_j - c y_i
          + sum_{j before i} (g_ji - c) x_j
    """
    _check_symmetric(matrices)
    y_prev = np.asarray(y_prev, dtype=float)
    x = np.asarray(x, dtype=float)
    pos = order.positions()
    before = pos[:, None] < pos[None, :]  # before[j, i]: j visited ahead of i
    earlier_ties = (before * matrices.G).T @ x
    earlier_demand = before.T.astype(float) @ x
    return (
        matrices.a
        - 2.0 * matrices.b * (y_prev + x)
        + matrices.G @ y_prev
        + earlier_ties
        - matrices.c * y_prev
        - matrices.c * earlier_demand
    )


def run_sequential(
    matrices: ModelMatrices,
    K: int,
    convention: PriceConvention = PriceConvention.ANTICIPATORY,
    order_policy: Fixed | RoundRobinFair | None = None,
) -> DemandTrajectory:
    if K < 1:
        raise ValueError("K must be at least 1")
    convention = PriceConvention(convention)
    if convention is PriceConvention.GREEDY:
        raise ValueError("greedy trajectories come from simultaneous.run_greedy")
    policy = order_policy or Fixed()
    n = matrices.n
    X = np.empty((K, n))
    Y = np.empty((K, n))
    Pr = np.empty((K, n))
    revenue = np.empty(K)
    orders: list[VisitOrder] = []
    negative: list[int] = []

    a_k = np.array(matrices.a)
    y_prev = np.zeros(n)
    spent = np.zeros(n)
    order = policy.first(n)
    for k in range(1, K + 1):
        if k > 1:
            order = policy.next(order, cumulative_utilities(y_prev, spent, matrices))
        x = matrices.M_inv @ a_k
        if np.any(x < -NEGATIVE_TOL):
            negative.append(k)
        if convention is PriceConvention.ANTICIPATORY:
            p = a_k - matrices.P @ x
        else:
            p = step4_prices(matrices, order, y_prev, x)
        y_prev = y_prev + x
        spent = spent + p * x
        X[k - 1], Y[k - 1], Pr[k - 1] = x, y_prev, p
        revenue[k - 1] = p @ x
        orders.append(order)
        a_k = matrices.T_op @ a_k
    return DemandTrajectory(X, Y, Pr, revenue, tuple(orders), convention, tuple(negative))


def contraction_rate(matrices: ModelMatrices) -> float:
    """Spectral radius of the transition operator (D M^-1)."""
    return numerics.spectral_radius(matrices.T_op)


def revenue_closed_form(matrices: ModelMatrices) -> float:
    """Infinite-horizon revenue, sum over k of x_k' D x_k.

    With S = D^1/2 M^-1 D^1/2 the per-period revenue is |S^(k-1) D^1/2 x_1|^2,
    so the series sums to x_1' (D^-1 - M^-1 D M^-1)^-1 x_1.
    """
    x1 = matrices.M_inv @ matrices.a
    d = np.diag(matrices.D)
    kernel = np.diag(1.0 / d) - matrices.M_inv @ (d[:, None] * matrices.M_inv)
    return float(x1 @ numerics.solve_linear(kernel, x1))


def commuting_revenue_form(matrices: ModelMatrices) -> float:
    """a' D M^-1 P^-1 (2I - P M^-1)^-1 a.

    Agrees with ``revenue_closed_form`` only when D commutes with M^-1
    (homogeneous b_i); kept to document that special case.
    """
    n = matrices.n
    inner = numerics.solve_linear(2.0 * np.eye(n) - matrices.P @ matrices.M_inv, matrices.a)
    return float(matrices.a @ matrices.D @ matrices.M_inv @ matrices.P_inv @ inner)


def truncation_tail_bound(matrices: ModelMatrices, K: int) -> float:
    """Upper bound on the revenue collected after period K."""
    rho = contraction_rate(matrices)
    x1 = matrices.M_inv @ matrices.a
    first = float(x1 @ matrices.D @ x1)
    if rho >= 1.0:
        return math.inf
    return rho ** (2 * K) / (1.0 - rho**2) * first


def welfare_dynamic(matrices: ModelMatrices) -> float:
    y = limit_demand(matrices)
    value = y @ ((matrices.Lambda + matrices.C_mat) / 2.0) @ y
    return float(value) - revenue_closed_form(matrices)


@dataclass(frozen=True)
class SymmetricForms:
    x_k: float
    p_km: float
    u_m_limit: float
    denominator: float = field(default=math.nan, compare=False)
    ratio: float = field(default=math.nan, compare=False)


def symmetric_closed_forms(a: float, b: float, g: float, c: float, N: int, k: int, m: int,
                           *, tol: float = 1e-16, max_terms: int = 100000) -> SymmetricForms:
    """Scalar forms for identical users on a complete graph with tie weight g.

    ``m`` is the visiting position (1-based) under a fixed order; ``u_m_limit``
    sums that user's per-period utility until the terms fall below ``tol``.
    """
    if not 1 <= m <= N:
        raise InvalidPosition(f"position {m} outside 1..{N}")
    if k < 1:
        raise ValueError("periods are numbered from 1")
    D = 4 * b + c - (N - 1) * g + N * c
    rho = (2 * b + c) / D

    def demand(t: int) -> float:
        return a * rho ** (t - 1) / D

    def cumulative(t: int) -> float:
        # demand summed over periods 1..t
        return a / D * (1 - rho**t) / (1 - rho) if rho != 1 else a / D * t

    def price(t: int, pos: int) -> float:
        y, x = cumulative(t - 1), demand(t)
        return (a - 2 * b * (y + x) + (N - 1) * g * y + (pos - 1) * g * x
                - c * y - c * (pos - 1) * x)

    total = a / (D * (1 - rho))
    gross = a * total - b * total**2 + (N - 1) * g * total**2 - 0.5 * c * (N * total) ** 2
    spend = 0.0
    for t in range(1, max_terms + 1):
        term = price(t, m) * demand(t)
        spend += term
        if abs(term) < tol * max(1.0, abs(spend)):
            break
    return SymmetricForms(demand(k), price(k, m), gross - spend, D, rho)
