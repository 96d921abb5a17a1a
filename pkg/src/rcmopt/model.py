"""Problem interface, solver configuration, result records and the shared
derivative / KKT evaluation utilities.

A problem is a plain container of callbacks (objective, constraints, optional
analytic derivatives). Everything here is pure given its inputs; callbacks
must be reentrant so problems can be solved concurrently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalBreakdown
from .kernels import ThinQR, apply_projection, solve_rt_lower, solve_upper

Vector = np.ndarray
Matrix = np.ndarray


def norm_inf(v: np.ndarray) -> float:
    """Infinity norm; zero for empty vectors."""
    return float(np.max(np.abs(v))) if v.size else 0.0


class Status(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    FEASIBILITY_FAILED = "FeasibilityFailed"
    NUMERICAL_BREAKDOWN = "NumericalBreakdown"


@dataclass(frozen=True)
class ProblemDef:
    """An equality-constrained minimization problem.

    minimize f(x) subject to c(x) = 0, with x in R^n and c mapping to R^m,
    0 <= m <= n. ``gradient`` and ``jacobian`` are optional analytic
    derivatives; when absent the solvers fall back to finite differences.
    """

    name: str
    n: int
    m: int
    objective: Callable[[Vector], float]
    constraints: Callable[[Vector], Vector]
    start_point: Vector
    gradient: Optional[Callable[[Vector], Vector]] = None
    jacobian: Optional[Callable[[Vector], Matrix]] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"{self.name}: n must be positive, got {self.n}")
        if not 0 <= self.m <= self.n:
            raise ValueError(f"{self.name}: need 0 <= m <= n, got m={self.m}, n={self.n}")
        start = np.atleast_1d(np.asarray(self.start_point, dtype=float))
        if start.shape != (self.n,):
            raise ValueError(f"{self.name}: start_point must have length {self.n}")
        object.__setattr__(self, "start_point", start)


@dataclass(frozen=True)
class RcmConfig:
    """Parameters of the main continuation solver.

    ``eps`` is the optimality tolerance on the projected gradient,
    ``eps0`` the feasibility tolerance (defaults to eps/10). The eta/gamma
    constants drive step acceptance and the trust-region style time-step
    updates; ``sigma0 / dt`` is the regularization shift; ``dt_illposed`` is
    the time-step threshold below which the solver switches from the BFGS
    phase to the projected-Hessian phase; ``theta1`` bounds the correction
    step relative to the prediction step.
    """

    eps: float = 1e-6
    eps0: Optional[float] = None
    eta_a: float = 1e-6
    eta_q: float = 1e-6
    eta1: float = 0.25
    eta2: float = 0.75
    gamma1: float = 2.0
    gamma2: float = 0.5
    sigma0: float = 1e-5
    dt0: float = 1e-2
    dt_illposed: float = 1e-3
    max_itc: int = 300
    theta1: float = 1e6
    fd_eps: float = 1e-6

    def __post_init__(self):
        if self.eps0 is None:
            object.__setattr__(self, "eps0", self.eps / 10.0)
        _check_common(self)
        for name in ("eps", "eps0", "eta_q", "sigma0", "dt0", "dt_illposed",
                     "theta1", "fd_eps"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.eps0 < self.eps:
            raise ValueError("eps0 must be smaller than eps")
        if self.max_itc < 1:
            raise ValueError("max_itc must be at least 1")


@dataclass(frozen=True)
class GcnmtrConfig:
    """Parameters of the feasibility-phase solver."""

    eps: float = 1e-7
    eta_a: float = 1e-6
    eta1: float = 0.25
    eta2: float = 0.75
    gamma1: float = 2.0
    gamma2: float = 0.5
    dtau0: float = 1e-2
    maxit: int = 400
    fd_eps: float = 1e-6

    def __post_init__(self):
        _check_common(self)
        for name in ("eps", "dtau0", "fd_eps"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be at least 1")


def _check_common(cfg) -> None:
    if not 0.0 < cfg.eta_a <= cfg.eta1 < cfg.eta2 < 1.0:
        raise ValueError("need 0 < eta_a <= eta1 < eta2 < 1")
    if not 0.0 < cfg.gamma2 < 1.0 < cfg.gamma1:
        raise ValueError("need 0 < gamma2 < 1 < gamma1")


@dataclass
class RunRecord:
    """Outcome of one solve, as reported by the benchmark harness."""

    problem: str
    n: int
    m: int
    status: Status
    x_final: Vector
    f_final: float
    kkt_residual: float
    constraint_violation: float
    itc_feasibility: int
    itc_main: int
    wall_time: float


# ---------------------------------------------------------------------------
# Evaluation helpers


def eval_objective(problem: ProblemDef, x: Vector) -> float:
    val = float(problem.objective(x))
    if not np.isfinite(val):
        raise NumericalBreakdown(f"{problem.name}: non-finite objective at x")
    return val


def eval_constraints(problem: ProblemDef, x: Vector) -> Vector:
    c = np.atleast_1d(np.asarray(problem.constraints(x), dtype=float))
    if c.shape != (problem.m,):
        raise NumericalBreakdown(
            f"{problem.name}: constraints returned shape {c.shape}, expected ({problem.m},)"
        )
    if c.size and not np.all(np.isfinite(c)):
        raise NumericalBreakdown(f"{problem.name}: non-finite constraint value")
    return c


def eval_gradient(problem: ProblemDef, x: Vector, fd_eps: float = 1e-6) -> Vector:
    """Analytic gradient when available, central differences otherwise."""
    if problem.gradient is not None:
        g = np.asarray(problem.gradient(x), dtype=float)
        if g.shape != (problem.n,):
            raise NumericalBreakdown(
                f"{problem.name}: gradient returned shape {g.shape}, expected ({problem.n},)"
            )
    else:
        g = central_diff_gradient(problem.objective, x, fd_eps)
    if not np.all(np.isfinite(g)):
        raise NumericalBreakdown(f"{problem.name}: non-finite gradient")
    return g


def eval_jacobian(problem: ProblemDef, x: Vector, fd_eps: float = 1e-6) -> Matrix:
    """Analytic constraint Jacobian when available, forward differences otherwise."""
    if problem.m == 0:
        return np.zeros((0, problem.n))
    if problem.jacobian is not None:
        a = np.asarray(problem.jacobian(x), dtype=float)
        if a.shape != (problem.m, problem.n):
            raise NumericalBreakdown(
                f"{problem.name}: jacobian returned shape {a.shape}, "
                f"expected ({problem.m}, {problem.n})"
            )
        if not np.all(np.isfinite(a)):
            raise NumericalBreakdown(f"{problem.name}: non-finite jacobian")
        return a
    return fd_jacobian(problem, x, fd_eps)


def fd_jacobian(problem: ProblemDef, x: Vector, fd_eps: float) -> Matrix:
    """Forward-difference constraint Jacobian, column by column.

    Column i is (c(x + fd_eps * e_i) - c(x)) / fd_eps. Exact on affine maps
    up to rounding; one-sided bias O(fd_eps) otherwise.
    """
    if fd_eps <= 0.0:
        raise ValueError("fd_eps must be positive")
    x = np.asarray(x, dtype=float)
    c0 = eval_constraints(problem, x)
    jac = np.empty((problem.m, problem.n))
    for i in range(problem.n):
        xp = x.copy()
        xp[i] += fd_eps
        jac[:, i] = (eval_constraints(problem, xp) - c0) / fd_eps
    return jac


def central_diff_gradient(fun: Callable[[Vector], float], x: Vector, h: float = 1e-6) -> Vector:
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (float(fun(xp)) - float(fun(xm))) / (2.0 * h)
    return g


def central_diff_jacobian(fun: Callable[[Vector], Vector], x: Vector, m: int, h: float = 1e-6) -> Matrix:
    x = np.asarray(x, dtype=float)
    jac = np.empty((m, x.size))
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (np.asarray(fun(xp), float) - np.asarray(fun(xm), float)) / (2.0 * h)
    return jac


def fd_projected_hessian(problem: ProblemDef, x: Vector, q: Matrix, fd_eps: float) -> Matrix:
    """Forward-difference approximation of P H P, symmetrized.

    Column i is (P g(x + fd_eps * P e_i) - P g(x)) / fd_eps with
    P v = v - Q (Q^T v). The raw difference matrix is not exactly symmetric
    under rounding, so (H + H^T)/2 is returned; downstream factorizations
    assume symmetry.
    """
    if fd_eps <= 0.0:
        raise ValueError("fd_eps must be positive")
    x = np.asarray(x, dtype=float)
    n = problem.n
    pg0 = apply_projection(q, eval_gradient(problem, x, fd_eps))
    hess = np.empty((n, n))
    for i in range(n):
        step = -(q @ q[i, :]) if q.shape[1] else np.zeros(n)
        step[i] += 1.0  # step = P e_i
        gi = eval_gradient(problem, x + fd_eps * step, fd_eps)
        hess[:, i] = (apply_projection(q, gi) - pg0) / fd_eps
    return 0.5 * (hess + hess.T)


def kkt_residual(problem: ProblemDef, x: Vector, qr: ThinQR, fd_eps: float = 1e-6) -> float:
    """Infinity norm of grad f + A^T lambda with the multiplier estimate
    lambda = -(A A^T)^{-1} A grad f.

    ``qr`` must hold the thin QR factors of A(x)^T, so A A^T = R^T R and the
    multiplier comes out of two triangular solves. For m = 0 this is just the
    gradient norm.
    """
    g = eval_gradient(problem, x, fd_eps)
    if problem.m == 0:
        return norm_inf(g)
    a = eval_jacobian(problem, x, fd_eps)
    u = solve_rt_lower(qr.r, a @ g)
    lam = solve_upper(qr.r, -u)
    return norm_inf(g + a.T @ lam)


def projected_gradient_norm(problem: ProblemDef, x: Vector, qr: ThinQR, fd_eps: float = 1e-6) -> float:
    g = eval_gradient(problem, x, fd_eps)
    return norm_inf(apply_projection(qr.q, g))


# ---------------------------------------------------------------------------
# Validation


def validate_problem(problem: ProblemDef, fd_eps: float = 1e-6,
                     rel_tol: float = 1e-4) -> list[str]:
    """Sanity-check a problem at its start point.

    Returns a list of human-readable issues; an empty list means the problem
    passed. Checks dimensions, finiteness of f and c, and agreement of any
    analytic derivatives with central differences to relative error
    ``rel_tol``. The caller decides whether to proceed on failures.
    """
    issues: list[str] = []
    x0 = problem.start_point
    if not np.all(np.isfinite(x0)):
        issues.append("start_point contains non-finite entries")
        return issues

    try:
        f0 = float(problem.objective(x0))
        if not np.isfinite(f0):
            issues.append(f"objective is not finite at start_point (f = {f0!r})")
    except Exception as exc:  # noqa: BLE001 - report, do not crash validation
        issues.append(f"objective raised at start_point: {exc!r}")

    try:
        c0 = np.atleast_1d(np.asarray(problem.constraints(x0), dtype=float))
        if c0.shape != (problem.m,):
            issues.append(
                f"constraints returned {c0.shape[0] if c0.ndim == 1 else c0.shape} "
                f"entries, expected {problem.m}"
            )
        elif c0.size and not np.all(np.isfinite(c0)):
            issues.append("constraints are not finite at start_point")
    except Exception as exc:  # noqa: BLE001
        issues.append(f"constraints raised at start_point: {exc!r}")

    if problem.gradient is not None:
        try:
            g = np.asarray(problem.gradient(x0), dtype=float)
            if g.shape != (problem.n,):
                issues.append(
                    f"gradient returned {g.shape[0] if g.ndim == 1 else g.shape} "
                    f"entries, expected {problem.n}"
                )
            else:
                g_fd = central_diff_gradient(problem.objective, x0, fd_eps)
                err, idx = _max_rel_error(g, g_fd)
                if err > rel_tol:
                    issues.append(
                        f"gradient disagrees with central differences at "
                        f"component {idx} (relative error {err:.3e})"
                    )
        except Exception as exc:  # noqa: BLE001
            issues.append(f"gradient raised at start_point: {exc!r}")

    if problem.jacobian is not None and problem.m > 0:
        try:
            a = np.asarray(problem.jacobian(x0), dtype=float)
            if a.shape != (problem.m, problem.n):
                issues.append(
                    f"jacobian returned shape {a.shape}, expected "
                    f"({problem.m}, {problem.n})"
                )
            else:
                a_fd = central_diff_jacobian(problem.constraints, x0, problem.m, fd_eps)
                err, (row, col) = _max_rel_error_matrix(a, a_fd)
                if err > rel_tol:
                    issues.append(
                        f"jacobian disagrees with central differences at row "
                        f"{row}, column {col} (relative error {err:.3e})"
                    )
        except Exception as exc:  # noqa: BLE001
            issues.append(f"jacobian raised at start_point: {exc!r}")

    return issues


def _max_rel_error(a: Vector, b: Vector) -> tuple[float, int]:
    scale = max(1.0, norm_inf(b))
    diff = np.abs(a - b) / scale
    idx = int(np.argmax(diff)) if diff.size else 0
    return (float(diff[idx]) if diff.size else 0.0), idx


def _max_rel_error_matrix(a: Matrix, b: Matrix) -> tuple[float, tuple[int, int]]:
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    diff = np.abs(a - b) / scale
    if not diff.size:
        return 0.0, (0, 0)
    row, col = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return float(diff[row, col]), (int(row), int(col))
