import numpy as np
import pytest

from rcmopt.errors import InternalInvariantViolation
from rcmopt.feasibility import (
    find_feasible_point,
    gcnmtr_direction,
    gcnmtr_jacobian_reuse,
    gcnmtr_ratio,
    gcnmtr_update_tau,
)
from rcmopt.kernels import thin_qr
from rcmopt.model import GcnmtrConfig, ProblemDef, Status, norm_inf


def feasibility_problem(n, m, constraints, start, jacobian=None):
    return ProblemDef("feas", n, m, lambda x: 0.0, constraints, start,
                      jacobian=jacobian)


class TestDirection:
    def test_coordinate_case(self):
        qr = thin_qr(np.array([[1.0], [0.0]]))  # A = [1, 0]
        d = gcnmtr_direction(qr, np.array([2.0]))
        assert np.allclose(d, [-2.0, 0.0], atol=1e-14)

    def test_normalized_row(self):
        a_mat = np.array([[1.0, 1.0]]) / np.sqrt(2.0)
        d = gcnmtr_direction(thin_qr(a_mat.T), np.array([np.sqrt(2.0)]))
        assert np.allclose(d, [-1.0, -1.0], atol=1e-12)

    def test_matches_pseudoinverse_oracle(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            a_mat = rng.standard_normal((4, 9))
            c = rng.standard_normal(4)
            d = gcnmtr_direction(thin_qr(a_mat.T), c)
            expected = -np.linalg.pinv(a_mat) @ c
            assert np.max(np.abs(d - expected)) <= 1e-10


class TestRatio:
    def test_full_reduction(self):
        r = gcnmtr_ratio(np.array([1.0]), np.array([0.0]), 1.0)
        assert r == pytest.approx(2.0)

    def test_growth_returns_minus_one(self):
        assert gcnmtr_ratio(np.array([1.0]), np.array([1.5]), 0.5) == -1.0

    def test_exact_linear_model_gives_one(self):
        c = np.array([0.3, -0.4])
        dtau = 0.37
        r = gcnmtr_ratio(c, c / (1.0 + dtau), dtau)
        assert r == pytest.approx(1.0, abs=1e-14)

    def test_feasible_point_is_an_error(self):
        with pytest.raises(InternalInvariantViolation):
            gcnmtr_ratio(np.zeros(2), np.ones(2), 0.1)


class TestUpdateTau:
    CFG = GcnmtrConfig()

    def test_perfect_ratio_doubles(self):
        assert gcnmtr_update_tau(0.01, 1.0, self.CFG) == pytest.approx(0.02)

    def test_middling_ratio_keeps(self):
        assert gcnmtr_update_tau(0.01, 0.5, self.CFG) == pytest.approx(0.01)

    def test_rejection_halves(self):
        assert gcnmtr_update_tau(0.01, -1.0, self.CFG) == pytest.approx(0.005)

    def test_all_branches_exhaustively(self):
        cfg = self.CFG
        cases = {
            1.0: cfg.gamma1,          # |1-r| = 0
            0.75: cfg.gamma1,         # |1-r| = eta1 exactly
            1.25: cfg.gamma1,
            0.6: 1.0,                 # eta1 < |1-r| < eta2
            1.7: 1.0,
            0.25: cfg.gamma2,         # |1-r| = eta2 exactly -> "others"
            0.0: cfg.gamma2,
            -1.0: cfg.gamma2,
            3.0: cfg.gamma2,
        }
        for r, factor in cases.items():
            assert gcnmtr_update_tau(1.0, r, cfg) == pytest.approx(factor)


class TestJacobianReuse:
    CFG = GcnmtrConfig()

    def test_close_ratio_reuses(self):
        assert gcnmtr_jacobian_reuse(0.9, self.CFG) is True

    def test_initial_zero_recomputes(self):
        assert gcnmtr_jacobian_reuse(0.0, self.CFG) is False

    def test_rejected_ratio_recomputes(self):
        assert gcnmtr_jacobian_reuse(-1.0, self.CFG) is False


class TestFindFeasiblePoint:
    def test_affine_system_first_direction_solves(self):
        rng = np.random.default_rng(67)
        a_mat = rng.standard_normal((3, 7))
        b = rng.standard_normal(3)
        p = feasibility_problem(7, 3, lambda z: a_mat @ z - b, np.ones(7))
        # With a large initial time step the scaled Newton step is essentially
        # the full (exact) correction.
        cfg = GcnmtrConfig(eps=1e-12, dtau0=1e6)
        z, itc, status = find_feasible_point(p, cfg=cfg)
        assert status is Status.CONVERGED
        assert norm_inf(a_mat @ z - b) <= 1e-12
        assert itc - 1 <= 3  # accepted steps

    def test_affine_endpoint_is_least_squares_projection(self):
        rng = np.random.default_rng(71)
        a_mat = rng.standard_normal((5, 11))
        b = rng.standard_normal(5)
        z0 = rng.standard_normal(11)
        p = feasibility_problem(11, 5, lambda z: a_mat @ z - b, z0)
        z, _, status = find_feasible_point(p, cfg=GcnmtrConfig(dtau0=1.0))
        assert status is Status.CONVERGED
        oracle = z0 - np.linalg.lstsq(a_mat, a_mat @ z0 - b, rcond=None)[0]
        assert np.max(np.abs(z - oracle)) <= 1e-6

    def test_small_nonlinear_system(self):
        # Same scale as a small flight-trim system: n = 8, m = 5.
        rng = np.random.default_rng(73)
        a_mat = rng.standard_normal((5, 8))

        def constraints(z):
            return a_mat @ z - 1.0 + 0.05 * z[:5] ** 2

        p = feasibility_problem(8, 5, constraints, np.zeros(8))
        z, itc, status = find_feasible_point(p)
        assert status is Status.CONVERGED
        assert norm_inf(constraints(z)) < 1e-7
        assert itc <= 50

    def test_feasible_start_returns_immediately(self):
        a_mat = np.array([[1.0, 2.0]])
        z0 = np.array([2.0, -1.0])  # A z0 = 0
        p = feasibility_problem(2, 1, lambda z: a_mat @ z, z0)
        z, itc, status = find_feasible_point(p)
        assert status is Status.CONVERGED
        assert itc == 1
        assert np.array_equal(z, z0)

    def test_infeasible_system_returns_best_iterate(self):
        p = feasibility_problem(2, 1, lambda z: np.array([z[0] ** 2 + 1.0]),
                                np.array([2.0, 0.0]))
        z, itc, status = find_feasible_point(p, cfg=GcnmtrConfig(maxit=30))
        assert status is Status.MAX_ITERATIONS
        assert np.all(np.isfinite(z))
        # Best possible residual is 1 at z1 = 0.
        assert abs(z[0]) < 2.0

    def test_unconstrained_is_rejected(self):
        p = ProblemDef("none", 2, 0, lambda x: 0.0, lambda x: np.zeros(0),
                       np.zeros(2))
        with pytest.raises(ValueError):
            find_feasible_point(p)

    def test_stale_factor_rejection_recovers(self):
        # Regression: reused factors can produce an unproductive direction;
        # the rejected trial must trigger a refresh instead of shrinking the
        # time step forever.
        from rcmopt.problems import get_problem

        named = get_problem("ackley-broyden-tridiagonal:n=50,m=10")
        z, itc, status = find_feasible_point(named.problem)
        assert status is Status.CONVERGED
        assert norm_inf(named.problem.constraints(z)) < 1e-7


class TestLoopProperties:
    def test_trial_step_is_exact_scalar_scaling(self):
        rng = np.random.default_rng(79)
        for _ in range(20):
            d = rng.standard_normal(12)
            dtau = 10.0 ** rng.uniform(-3, 3)
            alpha = dtau / (1.0 + dtau)
            step = alpha * d
            assert np.linalg.norm(step) == pytest.approx(
                alpha * np.linalg.norm(d), rel=1e-15)

    def test_affine_single_step_reduction_factor(self):
        rng = np.random.default_rng(83)
        a_mat = rng.standard_normal((4, 10))
        b = rng.standard_normal(4)
        z = rng.standard_normal(10)
        c = a_mat @ z - b
        d = gcnmtr_direction(thin_qr(a_mat.T), c)
        dtau = 9.0
        z1 = z + dtau / (1.0 + dtau) * d
        ratio = np.linalg.norm(a_mat @ z1 - b) / np.linalg.norm(c)
        assert ratio == pytest.approx(0.1, abs=1e-10)
