"""Dense real-matrix kernel: pivoted solves, inversion and spectral radius.

LU factorization is delegated to LAPACK (via scipy) with partial pivoting; the
pivot check and the power iteration are done here so that near-singular
models and non-contractive operators are reported the same way everywhere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonConvergenceWarning, SingularMatrix

PIVOT_RTOL = 1e-12


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def lu_factor(A) -> tuple[np.ndarray, np.ndarray]:
    """Partial-pivoting LU of ``A``; raises SingularMatrix on a tiny pivot."""
    A = _as_square(A)
    scale = np.abs(A).sum(axis=1).max() if A.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() <= PIVOT_RTOL * scale:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below {PIVOT_RTOL:g} * ||A||inf ({scale:.3e})"
        )
    return lu, piv


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b``; ``b`` may be a vector or a matrix of columns."""
    A = _as_square(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b is {b.shape}")
    factors = lu_factor(A)
    x = scipy.linalg.lu_solve(factors, b, check_finite=False)
    # one step of iterative refinement keeps the residual at the 1e-10 level
    # for the moderately conditioned operators built by market_model
    r = b - A @ x
    if np.abs(r).max(initial=0.0) > 1e-10 * max(1.0, np.abs(b).max(initial=0.0)):
        x = x + scipy.linalg.lu_solve(factors, r, check_finite=False)
    return x


def invert(A) -> np.ndarray:
    A = _as_square(A)
    return solve_linear(A, np.eye(A.shape[0]))


@dataclass(frozen=True)
class SpectralEstimate:
    radius: float
    converged: bool
    iterations: int
    squared: bool = False


def _power_iterate(A: np.ndarray, v: np.ndarray, tol: float, max_iter: int):
    """Norm-ratio power iteration. Returns (estimate, converged, iterations, stagnated)."""
    v = v / np.linalg.norm(v)
    estimate = 0.0
    history: list[float] = []
    for it in range(1, max_iter + 1):
        w = A @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0, True, it, True
        history.append(math.log(norm))
        if it > 1 and abs(norm - estimate) <= tol * norm:
            return norm, True, it, False
        estimate = norm
        v = w / norm
    # geometric-mean growth over the second half damps oscillation
    tail = history[len(history) // 2:]
    return math.exp(sum(tail) / len(tail)), False, max_iter, False


def power_iteration(A, tol: float = 1e-12, max_iter: int = 20000) -> SpectralEstimate:
    """Estimate of the dominant eigenvalue magnitude of ``A``.

    Starts from the all-ones vector and retries once from the first basis
    vector if the iterate collapses to zero. If the estimate does not settle
    (typically a +/- pair of dominant eigenvalues) the iteration is repeated
    on ``A @ A`` and the square root returned.
    """
    A = _as_square(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = A.shape[0]
    if not np.any(A):
        return SpectralEstimate(0.0, True, 0)

    estimate, converged, iters, stagnated = _power_iterate(A, np.ones(n), tol, max_iter)
    if stagnated:
        e1 = np.zeros(n)
        e1[0] = 1.0
        estimate, converged, more, _ = _power_iterate(A, e1, tol, max_iter)
        iters += more
    if converged:
        return SpectralEstimate(abs(estimate), True, iters)

    A2 = A @ A
    est2, converged2, more, _ = _power_iterate(A2, np.ones(n), tol, max_iter)
    radius = math.sqrt(abs(est2))
    return SpectralEstimate(radius, converged2, iters + more, squared=True)


def spectral_radius(A, tol: float = 1e-12, max_iter: int = 20000) -> float:
    result = power_iteration(A, tol=tol, max_iter=max_iter)
    if not result.converged:
        warnings.warn(
            f"power iteration did not converge after {result.iterations} steps; "
            f"returning estimate {result.radius:.6g}",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return result.radius
