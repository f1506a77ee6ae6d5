"""Market operators, standing-assumption checks and utility functionals.

Notation used throughout the package (all N x N unless noted):

* ``Lambda``   = diag(2 b_i)
* ``Lambda_c`` = diag(2 b_i + c/2)
* ``C_mat``    = c * ones((N, N))
* ``M``        = 2 Lambda_c - G + C_mat, the one-period Stackelberg operator
* ``P``        = Lambda - G + C_mat, the cumulative-demand operator
* ``D``        = 2 Lambda_c - Lambda = diag(2 b_i + c)
* ``T_op``     = I - P M^-1 = D M^-1, the period-to-period transition

Congestion is always the square-of-sum form (c/2) (sum_j x_j)^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import numerics
from .errors import IndexOutOfRange, SingularMatrix
from .graph import SocialGraph


@dataclass(frozen=True)
class MarketParams:
    a: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError(f"a and b lengths differ: {a.size} vs {b.size}")
        if np.any(a <= 0) or np.any(b <= 0):
            raise ValueError("intrinsic coefficients a_i and b_i must be positive")
        if not (np.isfinite(self.c) and self.c >= 0):
            raise ValueError("congestion coefficient c must be finite and nonnegative")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @property
    def n(self) -> int:
        return self.a.size

    @classmethod
    def homogeneous(cls, n: int, a: float, b: float, c: float) -> "MarketParams":
        return cls(np.full(n, a), np.full(n, b), c)


@dataclass(frozen=True, eq=False)
class ModelMatrices:
    params: MarketParams
    G: np.ndarray
    Lambda: np.ndarray
    Lambda_c: np.ndarray
    C_mat: np.ndarray
    M: np.ndarray
    P: np.ndarray

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def a(self) -> np.ndarray:
        return self.params.a

    @property
    def b(self) -> np.ndarray:
        return self.params.b

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def D(self) -> np.ndarray:
        return 2.0 * self.Lambda_c - self.Lambda

    @cached_property
    def M_inv(self) -> np.ndarray:
        return numerics.invert(self.M)

    @cached_property
    def P_inv(self) -> np.ndarray:
        return numerics.invert(self.P)

    @cached_property
    def T_op(self) -> np.ndarray:
        return np.eye(self.n) - self.P @ self.M_inv


def build_matrices(params: MarketParams, graph: SocialGraph | np.ndarray, *, factorize: bool = True) -> ModelMatrices:
    """Assemble the operators; with ``factorize`` the inverse of M is formed eagerly."""
    G = graph.ties if isinstance(graph, SocialGraph) else np.asarray(graph, dtype=float)
    n = params.n
    if G.shape != (n, n):
        raise ValueError(f"graph has {G.shape[0]} users but parameters describe {n}")
    c = params.c
    Lambda = np.diag(2.0 * params.b)
    Lambda_c = np.diag(2.0 * params.b + c / 2.0)
    C_mat = np.full((n, n), c)
    M = 2.0 * Lambda_c - G + C_mat
    P = Lambda - G + C_mat
    for arr in (G, Lambda, Lambda_c, C_mat, M, P):
        arr.setflags(write=False)
    mats = ModelMatrices(params, G, Lambda, Lambda_c, C_mat, M, P)
    if factorize:
        mats.T_op  # noqa: B018 - forces M^-1; raises SingularMatrix
    return mats


def assumption1_margins(params: MarketParams, graph: SocialGraph | np.ndarray) -> np.ndarray:
    """2 b_i - sum_{j != i} (g_ij - c) for every user."""
    G = graph.ties if isinstance(graph, SocialGraph) else np.asarray(graph, dtype=float)
    n = params.n
    off = G.sum(axis=1) - np.diag(G) - params.c * (n - 1)
    return 2.0 * params.b - off


@dataclass
class ValidationReport:
    assumption1_ok: bool
    assumption1_margins: np.ndarray
    invertible: bool | None = None
    rho_T_squared: float | None = None
    rho_converged: bool | None = None
    m_inv_nonnegative: bool | None = None
    demand_nonnegative: bool | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when the model is safe for every solver (negativity aside)."""
        return bool(
            self.assumption1_ok
            and self.invertible
            and self.rho_T_squared is not None
            and self.rho_T_squared < 1.0
        )

    def to_dict(self) -> dict:
        return {
            "assumption1_ok": self.assumption1_ok,
            "assumption1_margins": [float(m) for m in self.assumption1_margins],
            "invertible": self.invertible,
            "rho_T_squared": self.rho_T_squared,
            "rho_converged": self.rho_converged,
            "m_inv_nonnegative": self.m_inv_nonnegative,
            "demand_nonnegative": self.demand_nonnegative,
            "ok": self.ok,
            "warnings": list(self.warnings),
        }


def check_assumption1(params: MarketParams, graph: SocialGraph | np.ndarray) -> ValidationReport:
    margins = assumption1_margins(params, graph)
    ok = bool(np.all(margins > 0))
    report = ValidationReport(ok, margins)
    if not ok:
        bad = np.flatnonzero(margins <= 0)
        report.warnings.append(f"bounded-demand condition fails for users {bad.tolist()}")
    return report


def validate_model(matrices: ModelMatrices) -> ValidationReport:
    report = check_assumption1(matrices.params, matrices.G)
    try:
        M_inv = matrices.M_inv
    except SingularMatrix as exc:
        report.invertible = False
        report.warnings.append(f"2*Lambda_c - G + C is singular: {exc}")
        return report
    report.invertible = True
    T = matrices.T_op
    est = numerics.power_iteration(T @ T)
    report.rho_T_squared = est.radius
    report.rho_converged = est.converged
    if not est.converged:
        report.warnings.append("spectral radius estimate did not converge")
    if est.radius >= 1.0:
        report.warnings.append(
            f"transition operator is not contractive (rho(T)^2 = {est.radius:.6g})"
        )
    report.m_inv_nonnegative = bool(np.all(M_inv >= -1e-15))
    if not report.m_inv_nonnegative:
        report.warnings.append("(2*Lambda_c - G + C)^-1 has negative entries")
    x_hat = M_inv @ matrices.a
    report.demand_nonnegative = bool(np.all(x_hat >= -1e-12))
    if not report.demand_nonnegative:
        report.warnings.append(
            f"one-shot equilibrium demand is negative for {int(np.sum(x_hat < -1e-12))} users"
        )
    return report


def gross_utility(y, matrices: ModelMatrices) -> float:
    """a'y - y'(Lambda/2)y + y'Gy - (c/2)(sum y)^2: total user value before payments."""
    y = np.asarray(y, dtype=float)
    return float(
        matrices.a @ y
        - y @ (matrices.b * y)
        + y @ (matrices.G @ y)
        - 0.5 * matrices.c * y.sum() ** 2
    )


def user_net_utility(i: int, x, p_i: float, matrices: ModelMatrices) -> float:
    x = np.asarray(x, dtype=float)
    return float(
        matrices.a[i] * x[i]
        - matrices.b[i] * x[i] ** 2
        + x[i] * (matrices.G[i] @ x)
        - 0.5 * matrices.c * x.sum() ** 2
        - p_i * x[i]
    )


def cumulative_utilities(y, payments, matrices: ModelMatrices) -> np.ndarray:
    """Vector of every user's cumulative utility given cumulative demand and spend."""
    y = np.asarray(y, dtype=float)
    return (
        matrices.a * y
        - matrices.b * y**2
        + y * (matrices.G @ y)
        - 0.5 * matrices.c * y.sum() ** 2
        - np.asarray(payments, dtype=float)
    )


def cumulative_user_utility(i: int, trajectory, k: int, matrices: ModelMatrices) -> float:
    """Utility of user ``i`` after the first ``k`` periods of ``trajectory``."""
    if k < 0 or k > trajectory.periods:
        raise IndexOutOfRange(f"period {k} outside 0..{trajectory.periods}")
    if k == 0:
        return 0.0
    y = trajectory.y[k - 1]
    payments = (trajectory.p[:k] * trajectory.x[:k]).sum(axis=0)
    return float(cumulative_utilities(y, payments, matrices)[i])
