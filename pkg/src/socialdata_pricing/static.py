"""One-shot discriminatory pricing baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeDemand
from .model import ModelMatrices

NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class StaticOutcome:
    x_hat: np.ndarray
    p_hat: np.ndarray
    revenue: float
    welfare: float
    negative_demand: bool = False

    def to_dict(self) -> dict:
        return {
            "x_hat": self.x_hat.tolist(),
            "p_hat": self.p_hat.tolist(),
            "revenue": self.revenue,
            "welfare": self.welfare,
            "negative_demand": self.negative_demand,
        }


def solve_static(matrices: ModelMatrices, *, strict: bool = True) -> StaticOutcome:
    """Stackelberg equilibrium of the single-period game.

    Demand is M^-1 a, prices are D x and revenue a' M^-1 D M^-1 a. With ``strict``
    (the default) a negative equilibrium demand raises NegativeDemand;
    otherwise the outcome is returned with ``negative_demand`` set.
    """
    a = matrices.a
    x_hat = matrices.M_inv @ a
    if np.any(x_hat < -NEGATIVE_TOL) and strict:
        users = np.flatnonzero(x_hat < -NEGATIVE_TOL).tolist()
        raise NegativeDemand(f"static equilibrium demand negative for users {users}")
    p_hat = matrices.D @ x_hat
    p_alt = a - matrices.P @ x_hat
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(p_hat - p_alt).max() > 1e-10 * scale:
        raise ArithmeticError("static price forms disagree; operator assembly is inconsistent")
    revenue = float(x_hat @ matrices.D @ x_hat)
    welfare_operator = 2.0 * matrices.Lambda_c - matrices.Lambda / 2.0 + matrices.C_mat / 2.0
    welfare = float(x_hat @ welfare_operator @ x_hat) - revenue
    return StaticOutcome(
        x_hat=x_hat,
        p_hat=p_hat,
        revenue=revenue,
        welfare=welfare,
        negative_demand=bool(np.any(x_hat < -NEGATIVE_TOL)),
    )
