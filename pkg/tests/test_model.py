import math

import numpy as np
import pytest

from rcmopt.kernels import thin_qr
from rcmopt.model import (
    GcnmtrConfig,
    ProblemDef,
    RcmConfig,
    central_diff_gradient,
    fd_jacobian,
    fd_projected_hessian,
    kkt_residual,
    validate_problem,
)
from rcmopt.problems import (
    broyden_tridiagonal_jacobian,
    broyden_tridiagonal_residual,
    get_problem,
)

EPS = np.finfo(float).eps


def make_problem(n, m, objective, constraints, start, gradient=None, jacobian=None):
    return ProblemDef("test", n, m, objective, constraints, start,
                      gradient=gradient, jacobian=jacobian)


class TestProblemDef:
    def test_dimension_guards(self):
        with pytest.raises(ValueError):
            make_problem(2, 3, lambda x: 0.0, lambda x: np.zeros(3), np.zeros(2))
        with pytest.raises(ValueError):
            make_problem(2, 1, lambda x: 0.0, lambda x: np.zeros(1), np.zeros(3))

    def test_start_point_coerced_to_float(self):
        p = make_problem(2, 0, lambda x: 0.0, lambda x: np.zeros(0), [1, 2])
        assert p.start_point.dtype == float


class TestConfigs:
    def test_eps0_defaults_to_tenth(self):
        cfg = RcmConfig(eps=1e-4)
        assert cfg.eps0 == pytest.approx(1e-5)

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            RcmConfig(eta1=0.8)  # eta1 >= eta2
        with pytest.raises(ValueError):
            RcmConfig(gamma1=0.5)
        with pytest.raises(ValueError):
            RcmConfig(eps0=2e-6)  # eps0 >= eps
        with pytest.raises(ValueError):
            GcnmtrConfig(eta_a=0.5)  # eta_a > eta1


class TestFdJacobian:
    def test_exact_on_linear_map(self):
        a_mat = np.array([[1.0, 2.0], [3.0, 4.0]])
        p = make_problem(2, 2, lambda x: 0.0, lambda x: a_mat @ x, np.zeros(2))
        jac = fd_jacobian(p, np.array([0.3, -0.7]), 1e-6)
        assert np.max(np.abs(jac - a_mat)) < 1e-8

    def test_one_sided_bias_on_square(self):
        p = make_problem(1, 1, lambda x: 0.0, lambda x: np.array([x[0] ** 2]),
                         np.zeros(1))
        jac = fd_jacobian(p, np.array([1.0]), 1e-6)
        # ((1 + h)^2 - 1) / h = 2 + h exactly.
        assert jac[0, 0] == pytest.approx(2.0 + 1e-6, abs=1e-9)

    def test_broyden_tridiagonal_matches_analytic(self):
        n = 5
        x = np.ones(n)
        p = make_problem(n, n, lambda v: 0.0, broyden_tridiagonal_residual, x)
        jac = fd_jacobian(p, x, 1e-6)
        exact = broyden_tridiagonal_jacobian(x)
        rel = np.max(np.abs(jac - exact)) / np.max(np.abs(exact))
        assert rel <= 1e-5

    def test_affine_maps_reproduced_to_rounding(self):
        rng = np.random.default_rng(41)
        fd_eps = 1e-6
        for _ in range(25):
            n = int(rng.integers(1, 51))
            m = int(rng.integers(1, n + 1))
            a_mat = rng.standard_normal((m, n))
            b = rng.standard_normal(m)
            x = rng.standard_normal(n)
            p = make_problem(n, m, lambda v: 0.0,
                             lambda v, a=a_mat, bb=b: a @ v + bb, np.zeros(n))
            jac = fd_jacobian(p, x, fd_eps)
            # Rounding of the difference quotient: a few ulps of |c|/h plus
            # ulps of A itself.
            c_scale = np.max(np.abs(a_mat @ x + b)) + np.max(np.abs(a_mat))
            tol = 8 * EPS * (c_scale / fd_eps + np.max(np.abs(a_mat)))
            assert np.max(np.abs(jac - a_mat)) <= tol


class TestFdProjectedHessian:
    def test_identity_hessian_unconstrained(self):
        p = make_problem(3, 0, lambda x: 0.5 * float(x @ x),
                         lambda x: np.zeros(0), np.zeros(3),
                         gradient=lambda x: x)
        h = fd_projected_hessian(p, np.array([0.4, -1.0, 2.0]),
                                 np.zeros((3, 0)), 1e-6)
        assert np.max(np.abs(h - np.eye(3))) <= 1e-6

    def test_projected_quadratic_by_hand(self):
        d = np.diag([1.0, 2.0])
        p = make_problem(2, 1, lambda x: float(x @ d @ x),
                         lambda x: np.array([x[0]]), np.zeros(2),
                         gradient=lambda x: 2.0 * d @ x,
                         jacobian=lambda x: np.array([[1.0, 0.0]]))
        qr = thin_qr(np.array([[1.0], [0.0]]))
        h = fd_projected_hessian(p, np.array([0.3, 0.8]), qr.q, 1e-6)
        assert np.max(np.abs(h - np.array([[0.0, 0.0], [0.0, 4.0]]))) <= 1e-8

    def test_ackley_matches_central_difference_hessian(self):
        from rcmopt.problems import ackley

        value, grad = ackley(4)
        x = np.array([0.12, -0.07, 0.21, 0.05])
        p = make_problem(4, 0, value, lambda v: np.zeros(0), x, gradient=grad)
        h = fd_projected_hessian(p, x, np.zeros((4, 0)), 1e-6)
        oracle = np.empty((4, 4))
        for i in range(4):
            xp, xm = x.copy(), x.copy()
            xp[i] += 1e-5
            xm[i] -= 1e-5
            oracle[:, i] = (grad(xp) - grad(xm)) / 2e-5
        oracle = 0.5 * (oracle + oracle.T)
        assert np.max(np.abs(h - oracle)) <= 1e-3 * np.max(np.abs(oracle))

    def test_output_exactly_symmetric(self):
        rng = np.random.default_rng(43)
        a_mat = rng.standard_normal((2, 6))
        w = rng.standard_normal((6, 6))
        p = make_problem(6, 2, lambda x: float(x @ w @ x),
                         lambda x: a_mat @ x, np.zeros(6),
                         gradient=lambda x: (w + w.T) @ x)
        qr = thin_qr(a_mat.T)
        h = fd_projected_hessian(p, rng.standard_normal(6), qr.q, 1e-6)
        assert np.array_equal(h, h.T)


class TestKktResidual:
    def test_stationary_point_of_constrained_quadratic(self):
        p = make_problem(2, 1, lambda x: 0.5 * float(x @ x),
                         lambda x: np.array([x[0] - 1.0]),
                         np.zeros(2), gradient=lambda x: x,
                         jacobian=lambda x: np.array([[1.0, 0.0]]))
        x = np.array([1.0, 0.0])
        qr = thin_qr(np.array([[1.0], [0.0]]))
        assert kkt_residual(p, x, qr) <= 1e-12

    def test_unconstrained_is_gradient_norm(self):
        rng = np.random.default_rng(47)
        p = make_problem(4, 0, lambda x: 0.5 * float(x @ x),
                         lambda x: np.zeros(0), np.zeros(4),
                         gradient=lambda x: x)
        x = rng.standard_normal(4)
        assert kkt_residual(p, x, thin_qr(np.zeros((4, 0)))) == pytest.approx(
            np.max(np.abs(x)))

    def test_solver_result_on_hs008(self):
        import rcmopt

        rec = rcmopt.run_single("hs008")
        assert rec.status.value == "Converged"
        assert rec.kkt_residual <= 1e-6

    def test_invariant_under_constraint_permutation(self):
        rng = np.random.default_rng(53)
        n, m = 9, 4
        a_mat = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        w = rng.standard_normal((n, n))
        grad = lambda x: (w + w.T) @ x + b @ a_mat  # noqa: E731

        def problem_for(perm):
            return make_problem(
                n, m, lambda x: 0.0,
                lambda x, p=perm: (a_mat @ x)[p],
                np.zeros(n),
                gradient=grad,
                jacobian=lambda x, p=perm: a_mat[p, :],
            )

        x = rng.standard_normal(n)
        base = kkt_residual(problem_for(np.arange(m)), x,
                            thin_qr(a_mat.T))
        for _ in range(8):
            perm = rng.permutation(m)
            p = problem_for(perm)
            qr = thin_qr(a_mat[perm, :].T)
            assert kkt_residual(p, x, qr) == pytest.approx(base, abs=1e-10)


class TestValidateProblem:
    def test_well_formed_problem_passes(self):
        named = get_problem("hs009")
        assert validate_problem(named.problem) == []

    def test_short_gradient_reported(self):
        p = make_problem(3, 0, lambda x: float(x @ x), lambda x: np.zeros(0),
                         np.ones(3), gradient=lambda x: 2.0 * x[:2])
        issues = validate_problem(p)
        assert any("gradient returned 2" in msg for msg in issues)

    def test_sign_flip_in_jacobian_names_the_column(self):
        n = 5
        flip_row, flip_col = 2, 3

        def bad_jacobian(x):
            j = broyden_tridiagonal_jacobian(x)
            j[flip_row, flip_col] = -j[flip_row, flip_col]
            return j

        p = make_problem(n, n, lambda x: 0.0, broyden_tridiagonal_residual,
                         np.ones(n) * 0.7, jacobian=bad_jacobian)
        issues = validate_problem(p)
        assert len(issues) == 1
        assert f"column {flip_col}" in issues[0]
        assert f"row {flip_row}" in issues[0]

    def test_non_finite_objective_reported(self):
        p = make_problem(1, 0, lambda x: float("nan"), lambda x: np.zeros(0),
                         np.zeros(1))
        issues = validate_problem(p)
        assert any("not finite" in msg for msg in issues)


class TestCentralDiff:
    def test_matches_analytic_on_smooth_function(self):
        g = central_diff_gradient(lambda x: math.sin(x[0]) + x[1] ** 3,
                                  np.array([0.3, 0.5]), 1e-6)
        assert g[0] == pytest.approx(math.cos(0.3), abs=1e-9)
        assert g[1] == pytest.approx(0.75, abs=1e-9)
