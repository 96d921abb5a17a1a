"""Equality-constrained minimization by a regularized continuation method
with trust-region time-step control, plus a benchmark harness."""

from .errors import (
    IllConditioned,
    InternalInvariantViolation,
    NumericalBreakdown,
    RankDeficiency,
    SolverError,
)
from .kernels import (
    BfgsFactors,
    ThinQR,
    apply_projection,
    bfgs_append,
    dense_qr_solve,
    smw_apply_inverse,
    solve_rt_lower,
    thin_qr,
)
from .model import (
    GcnmtrConfig,
    ProblemDef,
    RcmConfig,
    RunRecord,
    Status,
    fd_jacobian,
    fd_projected_hessian,
    kkt_residual,
    validate_problem,
)
from .feasibility import (
    find_feasible_point,
    gcnmtr_direction,
    gcnmtr_jacobian_reuse,
    gcnmtr_ratio,
    gcnmtr_update_tau,
)
from .solver import (
    Phase,
    RejectReason,
    SolverState,
    StepOutcome,
    acceptance_test,
    correction_step,
    illposed_hessian_refresh,
    phase_switch_check,
    prediction_step,
    quadratic_model,
    solve,
    update_time_step,
)
from .problems import (
    NamedProblem,
    UnknownProblemError,
    ackley,
    classic_set,
    get_problem,
    gradient_constraint_family,
    hs_set,
)
from .bench import (
    SUITES,
    SuiteReport,
    emit_performance_profile,
    emit_table,
    profile_knots,
    run_single,
    run_suite,
)

__version__ = "0.1.0"

__all__ = [
    "BfgsFactors", "GcnmtrConfig", "IllConditioned",
    "InternalInvariantViolation", "NamedProblem", "NumericalBreakdown",
    "Phase", "ProblemDef", "RankDeficiency", "RcmConfig", "RejectReason",
    "RunRecord", "SUITES", "SolverError", "SolverState", "Status",
    "StepOutcome", "SuiteReport", "ThinQR", "UnknownProblemError",
    "acceptance_test", "ackley", "apply_projection", "bfgs_append",
    "classic_set", "correction_step", "dense_qr_solve",
    "emit_performance_profile", "emit_table", "fd_jacobian",
    "fd_projected_hessian", "find_feasible_point", "gcnmtr_direction",
    "gcnmtr_jacobian_reuse", "gcnmtr_ratio", "gcnmtr_update_tau",
    "get_problem", "gradient_constraint_family", "hs_set",
    "illposed_hessian_refresh", "kkt_residual", "phase_switch_check",
    "prediction_step", "profile_knots", "quadratic_model", "run_single",
    "run_suite", "smw_apply_inverse", "solve", "solve_rt_lower", "thin_qr",
    "update_time_step", "validate_problem",
]
