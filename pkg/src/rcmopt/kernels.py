"""Dense linear-algebra kernels used by both solvers.

Thin QR factorization, null-space projection, triangular solves, a dense QR
solve for the fallback phase, and the growing low-rank factors that represent
a BFGS matrix as ``B = I + S V^T`` so that ``(sigma*I + B)^{-1}`` can be
applied through the Sherman-Morrison-Woodbury identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IllConditioned, NumericalBreakdown, RankDeficiency

# Relative pivot threshold below which a triangular factor is declared
# rank deficient.
PIVOT_RTOL = 1e-12

# Condition-number estimate above which the SMW inner solve is refused.
SMW_COND_LIMIT = 1e14


@dataclass(frozen=True)
class ThinQR:
    """Thin QR factors of an n x m matrix (n >= m).

    ``q`` has orthonormal columns (n x m) and ``r`` is upper triangular
    (m x m). Instances are immutable and safe to share between threads.
    """

    q: np.ndarray
    r: np.ndarray

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return self.q.shape[1]


def thin_qr(mat: np.ndarray) -> ThinQR:
    """Factor ``mat`` (n x m, n >= m) as Q R with Q n x m orthonormal.

    Uses the LAPACK Householder factorization and keeps only the leading m
    columns of Q and the leading m x m block of R. Rank deficiency is not an
    error here; it surfaces later through the pivot checks of the triangular
    solves.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ValueError("thin_qr expects a 2-d array")
    n, m = mat.shape
    if n < m:
        raise ValueError(f"thin_qr needs n >= m, got shape {mat.shape}")
    if mat.size and not np.all(np.isfinite(mat)):
        raise NumericalBreakdown("non-finite entries passed to thin_qr")
    q, r = np.linalg.qr(mat, mode="reduced")
    return ThinQR(q, r)


def apply_projection(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply P = I - Q Q^T to ``v`` without forming P.

    ``q`` must have orthonormal columns; an empty q (m = 0) leaves v
    unchanged. Cost is O(n m).
    """
    v = np.asarray(v, dtype=float)
    if q.shape[1] == 0:
        return v.copy()
    return v - q @ (q.T @ v)


def _check_pivots(r: np.ndarray) -> None:
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return
    largest = diag.max()
    if largest == 0.0 or diag.min() <= PIVOT_RTOL * largest:
        raise RankDeficiency(
            f"triangular factor has pivot {diag.min():.3e} against largest {largest:.3e}"
        )


def solve_rt_lower(r: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve R^T d = rhs by forward substitution, R upper triangular."""
    _check_pivots(r)
    if r.shape[0] == 0:
        return np.zeros(0)
    _check_finite(r, rhs)
    return scipy.linalg.solve_triangular(r, rhs, trans="T", lower=False)


def solve_upper(r: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve R d = rhs by back substitution, R upper triangular."""
    _check_pivots(r)
    if r.shape[0] == 0:
        return np.zeros(0)
    _check_finite(r, rhs)
    return scipy.linalg.solve_triangular(r, rhs, lower=False)


def _check_finite(r: np.ndarray, rhs: np.ndarray) -> None:
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(rhs))):
        raise NumericalBreakdown("non-finite entries in a triangular solve")


def dense_qr_solve(b_mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the square system B d = rhs through a full QR of B."""
    b_mat = np.asarray(b_mat, dtype=float)
    if b_mat.size and not np.all(np.isfinite(b_mat)):
        raise NumericalBreakdown("non-finite entries passed to dense_qr_solve")
    q, r = np.linalg.qr(b_mat)
    return solve_upper(r, q.T @ np.asarray(rhs, dtype=float))


@dataclass(frozen=True)
class BfgsFactors:
    """Low-rank factors S, V (both n x p) of a BFGS matrix B = I + S V^T.

    Each curvature-positive update appends one column pair; skipped updates
    append zero columns so the factor history mirrors the update history.
    Instances are immutable; ``bfgs_append`` returns a new value.
    """

    s: np.ndarray
    v: np.ndarray

    @classmethod
    def fresh(cls, n: int) -> "BfgsFactors":
        # A single zero column pair: B reconstructs to the identity.
        return cls(np.zeros((n, 1)), np.zeros((n, 1)))

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @property
    def p(self) -> int:
        return self.s.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Return B x = x + S (V^T x)."""
        return x + self.s @ (self.v.T @ x)

    def reconstruct(self) -> np.ndarray:
        """Dense I + S V^T; intended for tests and small diagnostics."""
        return np.eye(self.n) + self.s @ self.v.T


def bfgs_append(factors: BfgsFactors, s_vec: np.ndarray, y_vec: np.ndarray) -> BfgsFactors:
    """Append one BFGS update (s, y) to the factor stack.

    When y^T s > 0 the columns [y / sqrt(s^T y), m / sqrt(s^T m)] are appended
    to S and [y / sqrt(s^T y), -m / sqrt(s^T m)] to V, with m = B s; the dense
    reconstruction then equals the classical BFGS update of the previous B.
    Otherwise two zero columns are appended and B is unchanged.
    """
    s_vec = np.asarray(s_vec, dtype=float)
    y_vec = np.asarray(y_vec, dtype=float)
    n = factors.n
    if s_vec.shape != (n,) or y_vec.shape != (n,):
        raise ValueError("update vectors must match the factor dimension")
    yts = float(y_vec @ s_vec)
    if yts > 0.0:
        m_vec = factors.apply(s_vec)
        stm = float(s_vec @ m_vec)
        if stm <= 0.0:
            # s^T B s <= 0 contradicts positive definiteness of the current B.
            raise NumericalBreakdown(
                f"BFGS update with y's = {yts:.3e} but s'Bs = {stm:.3e} <= 0"
            )
        cols_s = np.column_stack([y_vec / math.sqrt(yts), m_vec / math.sqrt(stm)])
        cols_v = np.column_stack([y_vec / math.sqrt(yts), -m_vec / math.sqrt(stm)])
    else:
        cols_s = np.zeros((n, 2))
        cols_v = np.zeros((n, 2))
    return BfgsFactors(np.hstack([factors.s, cols_s]), np.hstack([factors.v, cols_v]))


def _compacted(factors: BfgsFactors) -> tuple[np.ndarray, np.ndarray]:
    # Matched all-zero column pairs contribute nothing to I + S V^T; dropping
    # them keeps the inner SMW system small. The stored factors are unchanged.
    zero = (factors.s == 0.0).all(axis=0) & (factors.v == 0.0).all(axis=0)
    if zero.any():
        keep = ~zero
        return factors.s[:, keep], factors.v[:, keep]
    return factors.s, factors.v


def smw_apply_inverse(factors: BfgsFactors, sigma: float, vec: np.ndarray) -> np.ndarray:
    """Apply (sigma*I + B)^{-1} to ``vec`` with B = I + S V^T.

    Evaluated as (v - S ((1+sigma) I + V^T S)^{-1} V^T v) / (1+sigma); the
    p x p inner system is solved densely with partial pivoting. Raises
    IllConditioned when the inner matrix condition estimate exceeds 1e14,
    which callers treat as the cue to leave the quasi-Newton phase.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    vec = np.asarray(vec, dtype=float)
    s, v = _compacted(factors)
    scale = 1.0 + sigma
    if s.shape[1] == 0:
        return vec / scale
    inner = scale * np.eye(s.shape[1]) + v.T @ s
    cond = np.linalg.cond(inner)
    if not np.isfinite(cond) or cond > SMW_COND_LIMIT:
        raise IllConditioned(f"SMW inner system condition estimate {cond:.3e}")
    w = np.linalg.solve(inner, v.T @ vec)
    return (vec - s @ w) / scale
