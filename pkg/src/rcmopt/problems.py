"""Built-in benchmark problems.

Two families:

* constructed problems: the Ackley function as the objective, with equality
  constraints taken as the first m components of the gradient of a classic
  unconstrained test function (so feasible points are partial stationary
  points of that function). Scalable in n and m, started from the all-ones
  vector.
* a handful of small classic equality-constrained problems (hs007, hs008,
  hs009, hs046, hs100lnp), transcribed from the standard published
  collection; see each problem's provenance note.

Problems are addressable by id strings such as ``hs008``, ``ackley:n=50`` or
``ackley-rosenbrock:n=100,m=50``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import ProblemDef, central_diff_gradient, norm_inf

TWO_PI = 2.0 * math.pi


class UnknownProblemError(ValueError):
    """Raised when a problem id cannot be resolved."""


@dataclass(frozen=True)
class NamedProblem:
    """A registry entry: the problem plus its identity and provenance."""

    pid: str
    problem: ProblemDef
    scale_params: dict
    known_optimum: Optional[float] = None
    provenance: str = ""


@dataclass(frozen=True)
class ClassicFn:
    """A classic scalable test function with analytic value and gradient.

    ``hessian`` is analytic where cheap to write down; None means callers
    fall back to finite differences. ``block`` is the natural dimension
    granularity (functions defined on blocks ignore trailing remainder
    variables).
    """

    fid: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    block: int = 1

    def self_test(self, n: int = 8, h: float = 1e-6) -> float:
        """Max relative gradient error against central differences at a
        deterministic pseudo-random point."""
        rng = np.random.default_rng(abs(hash(self.fid)) % (2**32))
        x = rng.uniform(0.4, 1.6, size=n)
        g = self.gradient(x)
        g_fd = central_diff_gradient(self.value, x, h)
        return float(norm_inf(g - g_fd) / max(1.0, norm_inf(g_fd)))


# ---------------------------------------------------------------------------
# Ackley objective


def ackley(n: int, a: float = 20.0, b: float = 0.2):
    """Value and gradient of the n-dimensional Ackley function.

    f(x) = -a exp(-b sqrt(mean(x^2))) - exp(mean(cos(2 pi x))) + a + e.
    The global minimum is f(0) = 0. The root-mean-square term is not
    differentiable at the origin; the gradient is defined as the zero vector
    there, which is consistent with the origin being the minimizer.
    """
    if n < 1:
        raise ValueError("n must be positive")

    def value(x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        rms = math.sqrt(float(x @ x) / n)
        mean_cos = float(np.mean(np.cos(TWO_PI * x)))
        return -a * math.exp(-b * rms) - math.exp(mean_cos) + a + math.e

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rms = math.sqrt(float(x @ x) / n)
        mean_cos = float(np.mean(np.cos(TWO_PI * x)))
        osc = (TWO_PI / n) * math.exp(mean_cos) * np.sin(TWO_PI * x)
        if rms == 0.0:
            return osc  # zero vector at the exact origin
        radial = (a * b / (n * rms)) * math.exp(-b * rms) * x
        return radial + osc

    return value, gradient


# ---------------------------------------------------------------------------
# Classic unconstrained test functions (value + analytic gradient)


def _trid_value(x):
    return float(np.sum((x - 1.0) ** 2) - np.sum(x[1:] * x[:-1]))


def _trid_gradient(x):
    g = 2.0 * (x - 1.0)
    g[1:] -= x[:-1]
    g[:-1] -= x[1:]
    return g


def _trid_hessian(x):
    n = x.size
    h = 2.0 * np.eye(n)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = -1.0
    h[idx + 1, idx] = -1.0
    return h


def _rosenbrock_value(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def _rosenbrock_gradient(x):
    g = np.zeros_like(x)
    t = x[1:] - x[:-1] ** 2
    g[:-1] = -400.0 * x[:-1] * t - 2.0 * (1.0 - x[:-1])
    g[1:] += 200.0 * t
    return g


def _rosenbrock_hessian(x):
    n = x.size
    h = np.zeros((n, n))
    i = np.arange(n - 1)
    h[i, i] += 1200.0 * x[:-1] ** 2 - 400.0 * x[1:] + 2.0
    h[i + 1, i + 1] += 200.0
    h[i, i + 1] = -400.0 * x[:-1]
    h[i + 1, i] = -400.0 * x[:-1]
    return h


def broyden_tridiagonal_residual(x):
    """Componentwise residual (3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1 with
    zero boundary values."""
    r = (3.0 - 2.0 * x) * x + 1.0
    r[1:] -= x[:-1]
    r[:-1] -= 2.0 * x[1:]
    return r


def broyden_tridiagonal_jacobian(x):
    n = x.size
    j = np.zeros((n, n))
    i = np.arange(n)
    j[i, i] = 3.0 - 4.0 * x
    i = np.arange(n - 1)
    j[i + 1, i] = -1.0
    j[i, i + 1] = -2.0
    return j


def _broyden_value(x):
    r = broyden_tridiagonal_residual(x)
    return float(r @ r)


def _broyden_gradient(x):
    r = broyden_tridiagonal_residual(x)
    return 2.0 * broyden_tridiagonal_jacobian(x).T @ r


def _broyden_hessian(x):
    r = broyden_tridiagonal_residual(x)
    j = broyden_tridiagonal_jacobian(x)
    return 2.0 * j.T @ j - 8.0 * np.diag(r)


def _dbv_parts(x):
    n = x.size
    h = 1.0 / (n + 1)
    t = h * np.arange(1, n + 1)
    cube = (x + t + 1.0) ** 3
    r = 2.0 * x + 0.5 * h * h * cube
    r[1:] -= x[:-1]
    r[:-1] -= x[1:]
    return r, t, h


def discrete_boundary_value_residual(x):
    return _dbv_parts(x)[0]


def _dbv_jacobian(x):
    n = x.size
    _, t, h = _dbv_parts(x)
    j = np.zeros((n, n))
    i = np.arange(n)
    j[i, i] = 2.0 + 1.5 * h * h * (x + t + 1.0) ** 2
    i = np.arange(n - 1)
    j[i + 1, i] = -1.0
    j[i, i + 1] = -1.0
    return j


def _dbv_value(x):
    r = discrete_boundary_value_residual(x)
    return float(r @ r)


def _dbv_gradient(x):
    r = discrete_boundary_value_residual(x)
    return 2.0 * _dbv_jacobian(x).T @ r


def _dbv_hessian(x):
    r, t, h = _dbv_parts(x)
    j = _dbv_jacobian(x)
    return 2.0 * j.T @ j + np.diag(6.0 * h * h * (x + t + 1.0) * r)


def _powell_blocks(x):
    nb = x.size // 4
    xb = x[: 4 * nb].reshape(nb, 4)
    t1 = xb[:, 0] + 10.0 * xb[:, 1]
    t2 = xb[:, 2] - xb[:, 3]
    t3 = xb[:, 1] - 2.0 * xb[:, 2]
    t4 = xb[:, 0] - xb[:, 3]
    return nb, t1, t2, t3, t4


def _powell_value(x):
    nb, t1, t2, t3, t4 = _powell_blocks(x)
    if nb == 0:
        return 0.0
    return float(np.sum(t1**2 + 5.0 * t2**2 + t3**4 + 10.0 * t4**4))


def _powell_gradient(x):
    g = np.zeros_like(x)
    nb, t1, t2, t3, t4 = _powell_blocks(x)
    if nb == 0:
        return g
    gb = g[: 4 * nb].reshape(nb, 4)
    gb[:, 0] = 2.0 * t1 + 40.0 * t4**3
    gb[:, 1] = 20.0 * t1 + 4.0 * t3**3
    gb[:, 2] = 10.0 * t2 - 8.0 * t3**3
    gb[:, 3] = -10.0 * t2 - 40.0 * t4**3
    return g


def _dixon_price_value(x):
    i = np.arange(2, x.size + 1)
    return float((x[0] - 1.0) ** 2 + np.sum(i * (2.0 * x[1:] ** 2 - x[:-1]) ** 2))


def _dixon_price_gradient(x):
    n = x.size
    g = np.zeros_like(x)
    g[0] = 2.0 * (x[0] - 1.0)
    if n == 1:
        return g
    i = np.arange(2, n + 1)
    t = 2.0 * x[1:] ** 2 - x[:-1]
    g[1:] += 8.0 * i * x[1:] * t
    g[:-1] -= 2.0 * i * t
    return g


def _trigonometric_residual(x):
    n = x.size
    i = np.arange(1, n + 1)
    return n - np.sum(np.cos(x)) + i * (1.0 - np.cos(x)) - np.sin(x)


def _trigonometric_value(x):
    r = _trigonometric_residual(x)
    return float(r @ r)


def _trigonometric_gradient(x):
    n = x.size
    r = _trigonometric_residual(x)
    i = np.arange(1, n + 1)
    s, c = np.sin(x), np.cos(x)
    # J has rank-one structure sin(x_j) plus a diagonal part.
    sum_r = float(np.sum(r))
    return 2.0 * (sum_r * s + r * (i * s - c))


def _singular_broyden_value(x):
    b = broyden_tridiagonal_residual(x)
    return float(np.sum(b**4))


def _singular_broyden_gradient(x):
    b = broyden_tridiagonal_residual(x)
    w = 4.0 * b**3
    g = w * (3.0 - 4.0 * x)
    g[:-1] -= w[1:]
    g[1:] -= 2.0 * w[:-1]
    return g


def _wood_blocks(x):
    nb = x.size // 4
    return nb, x[: 4 * nb].reshape(nb, 4)


def _wood_value(x):
    nb, xb = _wood_blocks(x)
    if nb == 0:
        return 0.0
    x1, x2, x3, x4 = xb.T
    return float(np.sum(
        100.0 * (x1**2 - x2) ** 2 + (x1 - 1.0) ** 2
        + 90.0 * (x3**2 - x4) ** 2 + (x3 - 1.0) ** 2
        + 10.1 * ((x2 - 1.0) ** 2 + (x4 - 1.0) ** 2)
        + 19.8 * (x2 - 1.0) * (x4 - 1.0)
    ))


def _wood_gradient(x):
    g = np.zeros_like(x)
    nb, xb = _wood_blocks(x)
    if nb == 0:
        return g
    x1, x2, x3, x4 = xb.T
    gb = g[: 4 * nb].reshape(nb, 4)
    gb[:, 0] = 400.0 * x1 * (x1**2 - x2) + 2.0 * (x1 - 1.0)
    gb[:, 1] = -200.0 * (x1**2 - x2) + 20.2 * (x2 - 1.0) + 19.8 * (x4 - 1.0)
    gb[:, 2] = 360.0 * x3 * (x3**2 - x4) + 2.0 * (x3 - 1.0)
    gb[:, 3] = -180.0 * (x3**2 - x4) + 20.2 * (x4 - 1.0) + 19.8 * (x2 - 1.0)
    return g


def _pairs(x):
    np_pairs = x.size // 2
    xp = x[: 2 * np_pairs].reshape(np_pairs, 2)
    return np_pairs, xp[:, 0], xp[:, 1]


def _cliff_value(x):
    nb, u, v = _pairs(x)
    if nb == 0:
        return 0.0
    return float(np.sum(((u - 3.0) / 100.0) ** 2 - (u - v) + np.exp(20.0 * (u - v))))


def _cliff_gradient(x):
    g = np.zeros_like(x)
    nb, u, v = _pairs(x)
    if nb == 0:
        return g
    e = np.exp(20.0 * (u - v))
    gp = g[: 2 * nb].reshape(nb, 2)
    gp[:, 0] = (u - 3.0) / 5000.0 - 1.0 + 20.0 * e
    gp[:, 1] = 1.0 - 20.0 * e
    return g


def _psc1_value(x):
    nb, u, v = _pairs(x)
    if nb == 0:
        return 0.0
    t = u**2 + v**2 + u * v
    return float(np.sum(t**2 + np.sin(u) ** 2 + np.cos(v) ** 2))


def _psc1_gradient(x):
    g = np.zeros_like(x)
    nb, u, v = _pairs(x)
    if nb == 0:
        return g
    t = u**2 + v**2 + u * v
    gp = g[: 2 * nb].reshape(nb, 2)
    gp[:, 0] = 2.0 * t * (2.0 * u + v) + np.sin(2.0 * u)
    gp[:, 1] = 2.0 * t * (2.0 * v + u) - np.sin(2.0 * v)
    return g


def _eg2_value(x):
    n = x.size
    if n < 2:
        return float(0.5 * math.sin(x[0] ** 2))
    return float(np.sum(np.sin(x[0] + x[:-1] ** 2 - 1.0)) + 0.5 * math.sin(x[-1] ** 2))


def _eg2_gradient(x):
    n = x.size
    g = np.zeros_like(x)
    if n < 2:
        g[0] = x[0] * math.cos(x[0] ** 2)
        return g
    c = np.cos(x[0] + x[:-1] ** 2 - 1.0)
    g[0] = float(np.sum(c)) + 2.0 * x[0] * c[0]
    g[1:-1] = 2.0 * x[1:-1] * c[1:]
    g[-1] = x[-1] * math.cos(x[-1] ** 2)
    return g


def _bd1_value(x):
    nb, u, v = _pairs(x)
    if nb == 0:
        return 0.0
    t1 = u**2 + v**2 - 2.0
    t2 = np.exp(u - 1.0) - v
    return float(np.sum(t1**2 + t2**2))


def _bd1_gradient(x):
    g = np.zeros_like(x)
    nb, u, v = _pairs(x)
    if nb == 0:
        return g
    t1 = u**2 + v**2 - 2.0
    e = np.exp(u - 1.0)
    t2 = e - v
    gp = g[: 2 * nb].reshape(nb, 2)
    gp[:, 0] = 4.0 * u * t1 + 2.0 * t2 * e
    gp[:, 1] = 4.0 * v * t1 - 2.0 * t2
    return g


_CLASSICS = [
    ClassicFn("trid", _trid_value, _trid_gradient, _trid_hessian),
    ClassicFn("rosenbrock", _rosenbrock_value, _rosenbrock_gradient, _rosenbrock_hessian),
    ClassicFn("dixon-price", _dixon_price_value, _dixon_price_gradient),
    ClassicFn("broyden-tridiagonal", _broyden_value, _broyden_gradient, _broyden_hessian),
    ClassicFn("extended-powell-singular", _powell_value, _powell_gradient, block=4),
    ClassicFn("discrete-boundary-value", _dbv_value, _dbv_gradient, _dbv_hessian),
    ClassicFn("trigonometric", _trigonometric_value, _trigonometric_gradient),
    ClassicFn("singular-broyden", _singular_broyden_value, _singular_broyden_gradient),
    ClassicFn("extended-wood", _wood_value, _wood_gradient, block=4),
    ClassicFn("extended-cliff", _cliff_value, _cliff_gradient, block=2),
    ClassicFn("extended-psc1", _psc1_value, _psc1_gradient, block=2),
    ClassicFn("eg2", _eg2_value, _eg2_gradient),
    ClassicFn("extended-bd1", _bd1_value, _bd1_gradient, block=2),
]


def classic_set() -> list[ClassicFn]:
    """The classic functions whose gradients serve as constraint families."""
    return list(_CLASSICS)


def classic_by_id(fid: str) -> ClassicFn:
    for fn in _CLASSICS:
        if fn.fid == fid:
            return fn
    raise UnknownProblemError(f"unknown classic function id {fid!r}")


# ---------------------------------------------------------------------------
# Constructed problems


def gradient_constraint_family(base: str, n: int, m: int) -> ProblemDef:
    """Ackley objective with c(x) = the first m gradient components of the
    named classic function; analytic Jacobian rows come from that function's
    Hessian when implemented, finite differences otherwise.
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    fn = classic_by_id(base) if m > 0 else None
    value, grad = ackley(n)
    if m > 0:
        name = f"ackley-{base}:n={n},m={m}"

        def constraints(x, _g=fn.gradient, _m=m):
            return _g(np.asarray(x, dtype=float))[:_m]

        jacobian = None
        if fn.hessian is not None:
            def jacobian(x, _h=fn.hessian, _m=m):  # noqa: F811
                return _h(np.asarray(x, dtype=float))[:_m, :]
    else:
        name = f"ackley:n={n}"

        def constraints(x):
            return np.zeros(0)

        jacobian = None
    return ProblemDef(
        name=name,
        n=n,
        m=m,
        objective=value,
        constraints=constraints,
        gradient=grad,
        jacobian=jacobian,
        start_point=np.ones(n),
    )


# ---------------------------------------------------------------------------
# Classic small equality-constrained problems
#
# Formulations transcribed from the standard published collection of
# nonlinear programming test examples; they are not restated anywhere else
# in this package.


def _hs007() -> NamedProblem:
    def f(x):
        return math.log1p(x[0] ** 2) - x[1]

    def g(x):
        return np.array([2.0 * x[0] / (1.0 + x[0] ** 2), -1.0])

    def c(x):
        return np.array([(1.0 + x[0] ** 2) ** 2 + x[1] ** 2 - 4.0])

    def jac(x):
        return np.array([[4.0 * x[0] * (1.0 + x[0] ** 2), 2.0 * x[1]]])

    problem = ProblemDef("hs007", 2, 1, f, c, np.array([2.0, 2.0]),
                         gradient=g, jacobian=jac)
    return NamedProblem("hs007", problem, {"n": 2, "m": 1},
                        known_optimum=-math.sqrt(3.0),
                        provenance="standard collection; f* = -sqrt(3) at (0, sqrt(3))")


def _hs008() -> NamedProblem:
    def f(x):
        return -1.0

    def g(x):
        return np.zeros(2)

    def c(x):
        return np.array([x[0] ** 2 + x[1] ** 2 - 25.0, x[0] * x[1] - 9.0])

    def jac(x):
        return np.array([[2.0 * x[0], 2.0 * x[1]], [x[1], x[0]]])

    problem = ProblemDef("hs008", 2, 2, f, c, np.array([2.0, 1.0]),
                         gradient=g, jacobian=jac)
    return NamedProblem("hs008", problem, {"n": 2, "m": 2}, known_optimum=-1.0,
                        provenance="standard collection; feasibility-type, f constant")


def _hs009() -> NamedProblem:
    def f(x):
        return math.sin(math.pi * x[0] / 12.0) * math.cos(math.pi * x[1] / 16.0)

    def g(x):
        s1 = math.sin(math.pi * x[0] / 12.0)
        c1 = math.cos(math.pi * x[0] / 12.0)
        s2 = math.sin(math.pi * x[1] / 16.0)
        c2 = math.cos(math.pi * x[1] / 16.0)
        return np.array([math.pi / 12.0 * c1 * c2, -math.pi / 16.0 * s1 * s2])

    def c(x):
        return np.array([4.0 * x[0] - 3.0 * x[1]])

    def jac(x):
        return np.array([[4.0, -3.0]])

    problem = ProblemDef("hs009", 2, 1, f, c, np.array([0.0, 0.0]),
                         gradient=g, jacobian=jac)
    return NamedProblem("hs009", problem, {"n": 2, "m": 1}, known_optimum=-0.5,
                        provenance="standard collection; f* = -0.5 at (-3, -4) mod (12, 16)")


def _hs046() -> NamedProblem:
    def f(x):
        return ((x[0] - x[1]) ** 2 + (x[2] - 1.0) ** 2
                + (x[3] - 1.0) ** 4 + (x[4] - 1.0) ** 6)

    def g(x):
        return np.array([
            2.0 * (x[0] - x[1]),
            -2.0 * (x[0] - x[1]),
            2.0 * (x[2] - 1.0),
            4.0 * (x[3] - 1.0) ** 3,
            6.0 * (x[4] - 1.0) ** 5,
        ])

    def c(x):
        return np.array([
            x[0] ** 2 * x[3] + math.sin(x[3] - x[4]) - 1.0,
            x[1] + x[2] ** 4 * x[3] ** 2 - 2.0,
        ])

    def jac(x):
        cos_t = math.cos(x[3] - x[4])
        return np.array([
            [2.0 * x[0] * x[3], 0.0, 0.0, x[0] ** 2 + cos_t, -cos_t],
            [0.0, 1.0, 4.0 * x[2] ** 3 * x[3] ** 2, 2.0 * x[2] ** 4 * x[3], 0.0],
        ])

    start = np.array([math.sqrt(2.0) / 2.0, 1.75, 0.5, 2.0, 2.0])
    problem = ProblemDef("hs046", 5, 2, f, c, start, gradient=g, jacobian=jac)
    return NamedProblem("hs046", problem, {"n": 5, "m": 2}, known_optimum=0.0,
                        provenance="standard collection; f* = 0 at the all-ones point")


def _hs100lnp() -> NamedProblem:
    def f(x):
        return ((x[0] - 10.0) ** 2 + 5.0 * (x[1] - 12.0) ** 2 + x[2] ** 4
                + 3.0 * (x[3] - 11.0) ** 2 + 10.0 * x[4] ** 6 + 7.0 * x[5] ** 2
                + x[6] ** 4 - 4.0 * x[5] * x[6] - 10.0 * x[5] - 8.0 * x[6])

    def g(x):
        return np.array([
            2.0 * (x[0] - 10.0),
            10.0 * (x[1] - 12.0),
            4.0 * x[2] ** 3,
            6.0 * (x[3] - 11.0),
            60.0 * x[4] ** 5,
            14.0 * x[5] - 4.0 * x[6] - 10.0,
            4.0 * x[6] ** 3 - 4.0 * x[5] - 8.0,
        ])

    def c(x):
        return np.array([
            2.0 * x[0] ** 2 + 3.0 * x[1] ** 4 + x[2] + 4.0 * x[3] ** 2 + 5.0 * x[4] - 127.0,
            4.0 * x[0] ** 2 + x[1] ** 2 - 3.0 * x[0] * x[1] + 2.0 * x[2] ** 2 + 5.0 * x[5] - 11.0 * x[6],
        ])

    def jac(x):
        return np.array([
            [4.0 * x[0], 12.0 * x[1] ** 3, 1.0, 8.0 * x[3], 5.0, 0.0, 0.0],
            [8.0 * x[0] - 3.0 * x[1], 2.0 * x[1] - 3.0 * x[0], 4.0 * x[2], 0.0, 0.0, 5.0, -11.0],
        ])

    start = np.array([1.0, 2.0, 0.0, 4.0, 0.0, 1.0, 1.0])
    problem = ProblemDef("hs100lnp", 7, 2, f, c, start, gradient=g, jacobian=jac)
    return NamedProblem("hs100lnp", problem, {"n": 7, "m": 2},
                        known_optimum=680.630057374402,
                        provenance="standard collection; two constraints of the "
                                   "degree-4 seven-variable problem made equalities")


_HS_BUILDERS = {
    "hs007": _hs007,
    "hs008": _hs008,
    "hs009": _hs009,
    "hs046": _hs046,
    "hs100lnp": _hs100lnp,
}


def hs_set() -> list[NamedProblem]:
    """The built-in small equality-constrained classics."""
    return [build() for build in _HS_BUILDERS.values()]


# ---------------------------------------------------------------------------
# Registry / id resolution


def get_problem(pid: str) -> NamedProblem:
    """Resolve a problem id.

    Accepts the classic ids (``hs008``), ``ackley:n=N`` for the
    unconstrained objective, and ``ackley-<base>:n=N,m=M`` for the
    constructed constrained families.
    """
    pid = pid.strip()
    if pid in _HS_BUILDERS:
        return _HS_BUILDERS[pid]()
    head, _, tail = pid.partition(":")
    params = _parse_params(pid, tail)
    if head == "ackley":
        n = params.pop("n", None)
        m = params.pop("m", 0)
        if n is None or params:
            raise UnknownProblemError(f"{pid!r}: expected ackley:n=N[,m=0]")
        if m != 0:
            raise UnknownProblemError(f"{pid!r}: plain ackley takes m=0; "
                                      "use ackley-<base> for constraints")
        problem = gradient_constraint_family("trid", n, 0)
        return NamedProblem(pid, problem, {"n": n, "m": 0}, known_optimum=0.0,
                            provenance="constructed; unconstrained instance")
    if head.startswith("ackley-"):
        base = head[len("ackley-"):]
        n = params.pop("n", None)
        m = params.pop("m", None)
        if n is None or m is None or params:
            raise UnknownProblemError(f"{pid!r}: expected ackley-<base>:n=N,m=M")
        try:
            problem = gradient_constraint_family(base, n, m)
        except (UnknownProblemError, ValueError) as exc:
            raise UnknownProblemError(f"{pid!r}: {exc}") from exc
        return NamedProblem(pid, problem, {"n": n, "m": m},
                            provenance=f"constructed; constraints from the "
                                       f"{base} gradient")
    raise UnknownProblemError(f"unknown problem id {pid!r}")


def _parse_params(pid: str, tail: str) -> dict:
    params: dict[str, int] = {}
    if not tail:
        return params
    for part in tail.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in ("n", "m"):
            raise UnknownProblemError(f"{pid!r}: bad parameter {part!r}")
        try:
            params[key] = int(value)
        except ValueError as exc:
            raise UnknownProblemError(f"{pid!r}: bad integer in {part!r}") from exc
    return params


def list_problem_ids() -> list[str]:
    """Ids that resolve without parameters, for CLI help text."""
    return sorted(_HS_BUILDERS) + ["ackley:n=N", "ackley-<base>:n=N,m=M"]
