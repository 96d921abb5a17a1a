"""Feasibility phase: a continuation Newton iteration for the underdetermined
system c(z) = 0 with trust-region control of the time step.

Each trial moves along the minimum-norm Newton direction -A(z)^+ c(z), scaled
by dtau / (1 + dtau). The achieved-versus-ideal residual reduction ratio
drives both the time step and whether the (possibly expensive) Jacobian
factorization is reused on the next step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InternalInvariantViolation, NumericalBreakdown
from .kernels import ThinQR, solve_rt_lower, thin_qr
from .model import (
    GcnmtrConfig,
    ProblemDef,
    Status,
    eval_constraints,
    eval_jacobian,
    norm_inf,
)

log = logging.getLogger(__name__)

# Once dtau has collapsed this far the trial steps are below floating-point
# resolution and the run is declared stalled.
DTAU_STALL_FLOOR = 1e-20


@dataclass
class GcnmtrState:
    """Mutable loop state; ``qr`` may be stale by design when the previous
    ratio was close to one."""

    z: np.ndarray
    c_val: np.ndarray
    dtau: float
    qr: Optional[ThinQR]
    last_ratio: float
    newton_dir: Optional[np.ndarray]
    success_flag: bool
    itc: int


def gcnmtr_direction(qr: ThinQR, c_val: np.ndarray) -> np.ndarray:
    """Minimum-norm Newton direction -A^+ c from the factors of A^T.

    Solves W^T dm = -c by forward substitution and maps back through the
    orthonormal columns; equals the least-squares minimum-norm solution of
    A dz = -c for full-rank A.
    """
    return qr.q @ solve_rt_lower(qr.r, -c_val)


def gcnmtr_ratio(c_now: np.ndarray, c_trial: np.ndarray, dtau: float) -> float:
    """Achieved residual reduction against the linear-model prediction.

    Returns -1 outright when the trial residual grew; otherwise
    (|c_now| - |c_trial|) / ((dtau/(1+dtau)) |c_now|) in Euclidean norms.
    """
    if dtau <= 0.0:
        raise ValueError("dtau must be positive")
    n_now = float(np.linalg.norm(c_now))
    n_trial = float(np.linalg.norm(c_trial))
    if n_now == 0.0:
        raise InternalInvariantViolation("ratio requested at an already-feasible point")
    if n_now < n_trial:
        return -1.0
    return (n_now - n_trial) / ((dtau / (1.0 + dtau)) * n_now)


def gcnmtr_update_tau(dtau: float, r: float, cfg: GcnmtrConfig) -> float:
    """Trust-region style time-step update keyed on |1 - r|."""
    gap = abs(1.0 - r)
    if gap <= cfg.eta1:
        return cfg.gamma1 * dtau
    if gap < cfg.eta2:
        return dtau
    return cfg.gamma2 * dtau


def gcnmtr_jacobian_reuse(last_r: float, cfg: GcnmtrConfig) -> bool:
    """Keep the cached QR factors iff the last ratio was close to one."""
    return abs(1.0 - last_r) <= cfg.eta1


def find_feasible_point(problem: ProblemDef, z0: Optional[np.ndarray] = None,
                        cfg: Optional[GcnmtrConfig] = None,
                        ) -> tuple[np.ndarray, int, Status]:
    """Drive ||c(z)||_inf below cfg.eps starting from z0.

    Returns (z_star, itc, status). ``itc`` counts accepted-evaluation
    iterations: it is incremented exactly when the previous trial succeeded,
    so a feasible start returns itc = 1. On MaxIterations the iterate with
    the smallest residual seen so far is returned.
    """
    if problem.m < 1:
        raise ValueError("the feasibility phase needs at least one constraint")
    cfg = cfg if cfg is not None else GcnmtrConfig()
    z = np.asarray(z0 if z0 is not None else problem.start_point, dtype=float)

    state = GcnmtrState(
        z=z,
        c_val=eval_constraints(problem, z),
        dtau=cfg.dtau0,
        qr=None,
        last_ratio=0.0,
        newton_dir=None,
        success_flag=True,
        itc=0,
    )
    best_z = state.z
    best_res = norm_inf(state.c_val)

    trials = 0
    trial_cap = 20 * cfg.maxit
    qr_fresh = False  # factors evaluated at the current z

    while state.itc < cfg.maxit:
        if state.success_flag:
            state.itc += 1
            res = norm_inf(state.c_val)
            if res < cfg.eps:
                return state.z, state.itc, Status.CONVERGED
            if state.qr is None or not gcnmtr_jacobian_reuse(state.last_ratio, cfg):
                a_mat = eval_jacobian(problem, state.z, cfg.fd_eps)
                state.qr = thin_qr(a_mat.T)
                qr_fresh = True
            else:
                qr_fresh = False
            state.newton_dir = gcnmtr_direction(state.qr, state.c_val)

        step = state.dtau / (1.0 + state.dtau) * state.newton_dir
        z_trial = state.z + step
        try:
            c_trial = eval_constraints(problem, z_trial)
            ratio = gcnmtr_ratio(state.c_val, c_trial, state.dtau)
        except NumericalBreakdown:
            # A wild trial (overflow in c) is recoverable: reject and shrink.
            c_trial = None
            ratio = -1.0

        state.dtau = gcnmtr_update_tau(state.dtau, ratio, cfg)
        state.last_ratio = ratio

        if ratio >= cfg.eta_a:
            if np.linalg.norm(c_trial) > np.linalg.norm(state.c_val):
                raise InternalInvariantViolation("accepted step increased the residual")
            state.z = z_trial
            state.c_val = c_trial
            state.success_flag = True
            res = norm_inf(c_trial)
            if res < best_res:
                best_res, best_z = res, z_trial
        else:
            state.success_flag = False
            if not qr_fresh:
                # A trial built on reused factors failed; waiting on an
                # acceptance that may never come would deadlock, so refresh
                # at the current point before the next trial.
                state.qr = thin_qr(eval_jacobian(problem, state.z, cfg.fd_eps).T)
                state.newton_dir = gcnmtr_direction(state.qr, state.c_val)
                qr_fresh = True

        trials += 1
        if trials >= trial_cap:
            log.warning("%s: feasibility trial cap (%d) reached before maxit",
                        problem.name, trial_cap)
            return best_z, state.itc, Status.MAX_ITERATIONS
        if state.dtau < DTAU_STALL_FLOOR:
            log.info("%s: feasibility stalled at dtau = %.3e, best residual %.3e",
                     problem.name, state.dtau, best_res)
            return best_z, state.itc, Status.MAX_ITERATIONS

    log.info("%s: feasibility maxit (%d) reached, best residual %.3e",
             problem.name, cfg.maxit, best_res)
    return best_z, state.itc, Status.MAX_ITERATIONS
