"""Main continuation solver for equality-constrained minimization.

Each trial takes a prediction step tangent to the constraint manifold,
obtained from the regularized system (sigma0/dt * I + B) d = -P g, then a
correction step that pulls the point back toward c(x) = 0 through a cached
constraint-Jacobian factorization. Acceptance and the time step dt follow
trust-region rules on the ratio of actual to predicted objective reduction.

Two phases supply B: a growing BFGS approximation applied through the
Sherman-Morrison-Woodbury identity while the time step stays healthy
(well-posed phase), and the finite-difference two-sided projected Hessian
once dt falls below a threshold (ill-posed phase, a one-way switch).
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    IllConditioned,
    InternalInvariantViolation,
    NumericalBreakdown,
    RankDeficiency,
    SolverError,
)
from .feasibility import find_feasible_point
from .kernels import (
    BfgsFactors,
    ThinQR,
    apply_projection,
    bfgs_append,
    smw_apply_inverse,
    solve_upper,
    thin_qr,
)
from .model import (
    GcnmtrConfig,
    ProblemDef,
    RcmConfig,
    RunRecord,
    Status,
    eval_constraints,
    eval_gradient,
    eval_jacobian,
    eval_objective,
    fd_projected_hessian,
    kkt_residual,
    norm_inf,
)

log = logging.getLogger(__name__)

# Iterates or objective values beyond this magnitude abort the run.
DIVERGENCE_LIMIT = 1e30

# Once dt has been halved this far below its initial scale, trial steps are
# smaller than floating-point resolution at the iterate and no progress is
# possible; the run is declared stalled.
DT_STALL_FLOOR = 1e-20


class Phase(enum.Enum):
    WELL_POSED = "well-posed"
    ILL_POSED = "ill-posed"


class RejectReason(enum.Enum):
    RATIO_TOO_LOW = "RatioTooLow"
    INFEASIBLE = "Infeasible"
    ARMIJO_FAILED = "ArmijoFailed"
    CORRECTION_TOO_LARGE = "CorrectionTooLarge"


@dataclass
class SolverState:
    """Mutable state of one solve; committed quantities only.

    ``qr`` and ``a_mat`` always describe the constraint Jacobian at ``x``;
    ``pg`` is the projected gradient there. ``hess`` / ``hess_qr`` are the
    ill-posed phase caches (None means the identity initialization). The
    phase flag flips from WELL_POSED to ILL_POSED at most once.
    """

    x: np.ndarray
    f_val: float
    g_val: np.ndarray
    a_mat: np.ndarray
    qr: ThinQR
    pg: np.ndarray
    dt: float
    phase: Phase = Phase.WELL_POSED
    bfgs: BfgsFactors = None
    hess: Optional[np.ndarray] = None
    hess_qr: Optional[tuple[np.ndarray, np.ndarray]] = None
    last_rho: float = 0.0
    d_cached: Optional[np.ndarray] = None
    success_flag: bool = True
    itc: int = 0
    k: int = 0
    min_dt: float = field(default=np.inf)


@dataclass
class StepOutcome:
    """Everything the acceptance test needs about one trial."""

    s_p: np.ndarray
    s_c: np.ndarray
    x_trial: np.ndarray
    c_trial: np.ndarray
    f_trial: float
    hpred: float
    vpred: float
    pred: float
    ared: float
    rho: float
    recomputed: bool = False
    accepted: bool = False
    reject_reason: Optional[RejectReason] = None


def quadratic_model(f_k: float, g_k: np.ndarray,
                    apply_b: Callable[[np.ndarray], np.ndarray],
                    s: np.ndarray) -> float:
    """Local model f_k + s'g + 0.5 s'(B s), with B given as an operator."""
    return f_k + float(s @ g_k) + 0.5 * float(s @ apply_b(s))


def update_time_step(dt: float, rho: float, accepted: bool, cfg: RcmConfig) -> float:
    """Enlarge dt on well-predicted accepted steps, halve it otherwise."""
    if accepted and rho >= cfg.eta2:
        return cfg.gamma1 * dt
    if accepted and cfg.eta1 < rho < cfg.eta2:
        return dt
    return cfg.gamma2 * dt


def phase_switch_check(state: SolverState, cfg: RcmConfig) -> Phase:
    """Flip to the ill-posed phase once dt has collapsed; never flip back."""
    if state.phase is Phase.WELL_POSED and state.dt < cfg.dt_illposed:
        log.info("switching to the ill-posed phase at dt = %.3e", state.dt)
        state.phase = Phase.ILL_POSED
    return state.phase


def illposed_hessian_refresh(problem: ProblemDef, state: SolverState,
                             cfg: RcmConfig) -> bool:
    """Recompute the projected Hessian and its regularized QR factors when the
    last ratio strayed from one; otherwise keep the cached (stale) factors.

    Returns True when a refresh happened.
    """
    if state.phase is not Phase.ILL_POSED:
        raise ValueError("hessian refresh is only meaningful in the ill-posed phase")
    if abs(state.last_rho - 1.0) <= cfg.eta1 and state.hess_qr is not None:
        return False
    hess = fd_projected_hessian(problem, state.x, state.qr.q, cfg.fd_eps)
    reg = (cfg.sigma0 / state.dt) * np.eye(problem.n) + hess
    if not np.all(np.isfinite(reg)):
        raise NumericalBreakdown("non-finite regularized projected Hessian")
    qb, rb = np.linalg.qr(reg)
    state.hess = hess
    state.hess_qr = (qb, rb)
    return True


def prediction_step(problem: ProblemDef, state: SolverState, cfg: RcmConfig) -> np.ndarray:
    """Tangent move s_p = dt/(1+dt) * P d with d from the phase-appropriate
    regularized solve.

    In the well-posed phase d is recomputed only after an accepted trial;
    after a rejection the cached d is merely rescaled by the new dt. An
    ill-conditioned SMW solve switches the solver to the ill-posed phase.
    """
    if state.phase is Phase.WELL_POSED:
        if state.success_flag or state.d_cached is None:
            sigma = cfg.sigma0 / state.dt
            try:
                state.d_cached = -smw_apply_inverse(state.bfgs, sigma, state.pg)
            except IllConditioned as exc:
                log.warning("%s: %s; switching to the ill-posed phase",
                            problem.name, exc)
                state.phase = Phase.ILL_POSED
    if state.phase is Phase.ILL_POSED:
        illposed_hessian_refresh(problem, state, cfg)
        qb, rb = state.hess_qr
        state.d_cached = solve_upper(rb, -(qb.T @ state.pg))
    d = state.d_cached
    return state.dt / (1.0 + state.dt) * apply_projection(state.qr.q, d)


def correction_step(problem: ProblemDef, state: SolverState, x_p: np.ndarray,
                    cfg: RcmConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Pull the predicted point back toward the constraint manifold.

    First tries the Jacobian factors cached at the current iterate; if the
    result misses ||c||_inf <= eps0, refactors at the predicted point and
    solves once more. Returns (s_c, x_next, c_next, recomputed). With m = 0
    there is nothing to correct.
    """
    if problem.m == 0:
        return np.zeros(problem.n), x_p, np.zeros(0), False
    c_p = eval_constraints(problem, x_p)
    d_c = _shortest_increment(state.qr, c_p)
    x_next = x_p + d_c
    c_next = eval_constraints(problem, x_next)
    recomputed = False
    if norm_inf(c_next) > cfg.eps0:
        qr_p = thin_qr(eval_jacobian(problem, x_p, cfg.fd_eps).T)
        d_c = _shortest_increment(qr_p, c_p)
        x_next = x_p + d_c
        c_next = eval_constraints(problem, x_next)
        recomputed = True
    return d_c, x_next, c_next, recomputed


def _shortest_increment(qr: ThinQR, c_val: np.ndarray) -> np.ndarray:
    # -A^+ c through the factors of A^T: solve R^T d = -c, then map by Q.
    from .kernels import solve_rt_lower

    return qr.q @ solve_rt_lower(qr.r, -c_val)


def acceptance_test(outcome: StepOutcome, state: SolverState, cfg: RcmConfig) -> bool:
    """Decide a trial: the reduction ratio must clear eta_a, the trial point
    must be feasible to eps0, the predicted reduction must satisfy the
    Armijo-type bound, and the correction must not dwarf the prediction.

    Fills ``outcome.accepted`` and ``outcome.reject_reason``.
    """
    sp_norm = float(np.linalg.norm(outcome.s_p))
    sc_norm = float(np.linalg.norm(outcome.s_c))
    pg_norm = float(np.linalg.norm(state.pg))

    if not outcome.rho >= cfg.eta_a:
        outcome.reject_reason = RejectReason.RATIO_TOO_LOW
    elif outcome.c_trial.size and norm_inf(outcome.c_trial) > cfg.eps0:
        outcome.reject_reason = RejectReason.INFEASIBLE
    elif not outcome.pred >= cfg.eta_q * sp_norm * pg_norm:
        outcome.reject_reason = RejectReason.ARMIJO_FAILED
    elif not sc_norm <= cfg.theta1 * sp_norm:
        outcome.reject_reason = RejectReason.CORRECTION_TOO_LARGE
    else:
        outcome.accepted = True
    return outcome.accepted


def _model_operator(state: SolverState) -> Callable[[np.ndarray], np.ndarray]:
    if state.phase is Phase.WELL_POSED:
        return state.bfgs.apply
    if state.hess is None:
        return lambda v: v
    hess = state.hess
    return lambda v: hess @ v


def _build_outcome(state: SolverState, s_p, s_c, x_trial, c_trial, f_trial) -> StepOutcome:
    apply_b = _model_operator(state)
    s_tot = s_p + s_c
    q_sp = quadratic_model(state.f_val, state.g_val, apply_b, s_p)
    q_st = quadratic_model(state.f_val, state.g_val, apply_b, s_tot)
    hpred = state.f_val - q_sp
    vpred = q_sp - q_st
    pred = state.f_val - q_st
    # The split must reassemble the direct evaluation: pred = hpred + vpred.
    gap = abs(pred - (hpred + vpred))
    if gap > 1e-10 * (abs(hpred) + abs(vpred) + abs(pred)):
        raise InternalInvariantViolation(
            f"predicted-reduction split off by {gap:.3e}"
        )
    ared = state.f_val - f_trial
    if pred != 0.0:
        rho = ared / pred
    else:
        rho = np.inf if ared > 0.0 else -np.inf
    return StepOutcome(
        s_p=s_p, s_c=s_c, x_trial=x_trial, c_trial=c_trial, f_trial=f_trial,
        hpred=hpred, vpred=vpred, pred=pred, ared=ared, rho=rho,
    )


def solve(problem: ProblemDef, z0: Optional[np.ndarray] = None,
          cfg: Optional[RcmConfig] = None,
          gcnmtr_cfg: Optional[GcnmtrConfig] = None,
          trace: Optional[list] = None) -> RunRecord:
    """Minimize the problem's objective subject to its equality constraints.

    Runs the feasibility phase from ``z0`` (the problem's start point by
    default; skipped when m = 0), then iterates prediction / correction /
    acceptance until the projected gradient norm falls to cfg.eps or the
    accepted-iteration budget runs out. Never raises for numerical trouble:
    failures come back in the record's status.

    When ``trace`` is a list, one dict per trial is appended with keys
    k, dt, rho, pg_inf, c_inf, phase, accepted plus the committed objective
    value f (used by invariant checks; the CLI writes only the public keys).
    """
    cfg = cfg if cfg is not None else RcmConfig()
    t_start = time.perf_counter()
    z = np.asarray(z0 if z0 is not None else problem.start_point, dtype=float)

    itc_feas = 0
    if problem.m >= 1:
        gcfg = gcnmtr_cfg if gcnmtr_cfg is not None else GcnmtrConfig(
            eps=cfg.eps0, fd_eps=cfg.fd_eps)
        try:
            x0, itc_feas, feas_status = find_feasible_point(problem, z, gcfg)
        except SolverError as exc:
            log.warning("%s: feasibility phase failed: %s", problem.name, exc)
            return _final_record(problem, z, 0, 0, Status.FEASIBILITY_FAILED,
                                 cfg, t_start)
        if feas_status is not Status.CONVERGED and _violation(problem, x0) > cfg.eps:
            return _final_record(problem, x0, itc_feas, 0,
                                 Status.FEASIBILITY_FAILED, cfg, t_start)
    else:
        x0 = z

    try:
        state = _initial_state(problem, x0, cfg)
    except SolverError as exc:
        log.warning("%s: %s", problem.name, exc)
        return _final_record(problem, x0, itc_feas, 0,
                             Status.NUMERICAL_BREAKDOWN, cfg, t_start)
    try:
        status = _main_loop(problem, state, cfg, trace)
    except SolverError as exc:
        log.warning("%s: %s", problem.name, exc)
        status = Status.NUMERICAL_BREAKDOWN
    return _final_record(problem, state.x, itc_feas, state.itc, status, cfg,
                         t_start)


def _initial_state(problem: ProblemDef, x0: np.ndarray, cfg: RcmConfig) -> SolverState:
    f0 = eval_objective(problem, x0)
    g0 = eval_gradient(problem, x0, cfg.fd_eps)
    a0 = eval_jacobian(problem, x0, cfg.fd_eps)
    qr0 = thin_qr(a0.T)
    pg0 = apply_projection(qr0.q, g0)
    return SolverState(
        x=x0, f_val=f0, g_val=g0, a_mat=a0, qr=qr0, pg=pg0, dt=cfg.dt0,
        bfgs=BfgsFactors.fresh(problem.n),
    )


def _main_loop(problem: ProblemDef, state: SolverState, cfg: RcmConfig,
               trace: Optional[list]) -> Status:
    trial_cap = 20 * cfg.max_itc
    while norm_inf(state.pg) > cfg.eps:
        if state.itc >= cfg.max_itc:
            log.info("%s: accepted-iteration budget max_itc = %d reached",
                     problem.name, cfg.max_itc)
            return Status.MAX_ITERATIONS
        if state.k >= trial_cap:
            log.warning("%s: trial cap %d reached before max_itc",
                        problem.name, trial_cap)
            return Status.MAX_ITERATIONS
        if state.dt < DT_STALL_FLOOR:
            log.info("%s: stalled at dt = %.3e with |pg| = %.3e",
                     problem.name, state.dt, norm_inf(state.pg))
            return Status.MAX_ITERATIONS
        state.k += 1
        state.min_dt = min(state.min_dt, state.dt)
        if state.dt <= 0.0:
            raise InternalInvariantViolation("time step lost positivity")
        phase_switch_check(state, cfg)
        dt_used = state.dt
        pg_at_trial = norm_inf(state.pg)

        outcome = None
        try:
            s_p = prediction_step(problem, state, cfg)
            _check_tangency(state, s_p)
            x_p = state.x + s_p
            s_c, x_trial, c_trial, recomputed = correction_step(
                problem, state, x_p, cfg)
            f_trial = eval_objective(problem, x_trial)
            outcome = _build_outcome(state, s_p, s_c, x_trial, c_trial, f_trial)
            outcome.recomputed = recomputed
            acceptance_test(outcome, state, cfg)
        except NumericalBreakdown as exc:
            # A non-finite trial evaluation rejects the trial; the shrinking
            # time step brings the next one closer to the current iterate.
            log.debug("%s: trial rejected on evaluation failure: %s",
                      problem.name, exc)

        if outcome is not None and outcome.accepted:
            _commit(problem, state, outcome, cfg)
            rho = outcome.rho
        else:
            state.success_flag = False
            rho = outcome.rho if outcome is not None else -np.inf

        state.last_rho = rho
        state.dt = update_time_step(state.dt, rho, bool(outcome and outcome.accepted), cfg)

        if trace is not None:
            trace.append({
                "k": state.k,
                "dt": dt_used,
                "rho": float(rho),
                "pg_inf": pg_at_trial,
                "c_inf": norm_inf(outcome.c_trial) if outcome is not None else float("inf"),
                "phase": state.phase.value,
                "accepted": bool(outcome and outcome.accepted),
                "f": state.f_val,
            })

        if abs(state.f_val) > DIVERGENCE_LIMIT or norm_inf(state.x) > DIVERGENCE_LIMIT:
            raise NumericalBreakdown("iterates diverged past the overflow guard")
    return Status.CONVERGED


def _commit(problem: ProblemDef, state: SolverState, outcome: StepOutcome,
            cfg: RcmConfig) -> None:
    if outcome.c_trial.size and norm_inf(outcome.c_trial) > cfg.eps0:
        raise InternalInvariantViolation("accepted iterate violates feasibility")
    if not outcome.f_trial < state.f_val + 1e-15 * abs(state.f_val):
        raise InternalInvariantViolation(
            f"accepted step did not decrease f ({state.f_val!r} -> {outcome.f_trial!r})"
        )
    g_new = eval_gradient(problem, outcome.x_trial, cfg.fd_eps)
    a_new = eval_jacobian(problem, outcome.x_trial, cfg.fd_eps)
    qr_new = thin_qr(a_new.T)
    pg_new = apply_projection(qr_new.q, g_new)

    if state.phase is Phase.WELL_POSED:
        s_k = outcome.x_trial - state.x
        y_k = pg_new - state.pg
        state.bfgs = bfgs_append(state.bfgs, s_k, y_k)

    state.x = outcome.x_trial
    state.f_val = outcome.f_trial
    state.g_val = g_new
    state.a_mat = a_new
    state.qr = qr_new
    state.pg = pg_new
    state.success_flag = True
    state.itc += 1


def _check_tangency(state: SolverState, s_p: np.ndarray) -> None:
    # The prediction step must stay in the Jacobian's null space: A s_p = 0
    # up to rounding.
    if state.a_mat.shape[0] == 0 or not s_p.size:
        return
    lhs = norm_inf(state.a_mat @ s_p)
    bound = 1e-10 * norm_inf(state.a_mat) * max(norm_inf(s_p), 1e-300)
    if lhs > bound:
        raise InternalInvariantViolation(
            f"prediction step leaves the tangent space: |A s_p| = {lhs:.3e}"
        )


def _violation(problem: ProblemDef, x: np.ndarray) -> float:
    if problem.m == 0:
        return 0.0
    try:
        return norm_inf(eval_constraints(problem, x))
    except NumericalBreakdown:
        return float("inf")


def _final_record(problem: ProblemDef, x: np.ndarray, itc_feas: int,
                  itc_main: int, status: Status, cfg: RcmConfig,
                  t_start: float) -> RunRecord:
    # Report from scratch at the final point: fresh factors, fresh multiplier,
    # independent of any solver caches.
    try:
        f_final = eval_objective(problem, x)
    except NumericalBreakdown:
        f_final = float("inf")
    violation = _violation(problem, x)
    try:
        qr = thin_qr(eval_jacobian(problem, x, cfg.fd_eps).T)
        kkt = kkt_residual(problem, x, qr, cfg.fd_eps)
    except SolverError:
        kkt = float("inf")
    if status is Status.CONVERGED and not (kkt <= cfg.eps and violation <= cfg.eps):
        log.warning("%s: demoting Converged status (kkt %.3e, violation %.3e)",
                    problem.name, kkt, violation)
        status = Status.MAX_ITERATIONS
    return RunRecord(
        problem=problem.name,
        n=problem.n,
        m=problem.m,
        status=status,
        x_final=np.asarray(x, dtype=float),
        f_final=f_final,
        kkt_residual=kkt,
        constraint_violation=violation,
        itc_feasibility=itc_feas,
        itc_main=itc_main,
        wall_time=time.perf_counter() - t_start,
    )
