"""Failure signals shared by the kernels and both solvers."""


class SolverError(Exception):
    """Base class for numerical failures raised by this package."""


class NumericalBreakdown(SolverError):
    """An evaluation produced non-finite values, an iterate diverged, or an
    update lost positive definiteness."""


class RankDeficiency(SolverError):
    """A triangular factor has a negligible pivot relative to its largest one."""


class IllConditioned(SolverError):
    """The low-rank inner system is too ill-conditioned to solve reliably."""


class InternalInvariantViolation(SolverError):
    """An invariant the iteration is supposed to maintain was broken; this
    indicates a bug or a pathological problem, not a user error."""
