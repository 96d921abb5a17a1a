"""Solve a tiny hand-checkable problem end to end.

We minimize half the squared distance to the point (1, 1) subject to the
single linear constraint x1 = 0. Working it out on paper: the feasible set is
the x2-axis, the closest point to (1, 1) on it is (0, 1), and the multiplier
is 1 (the gradient (x - (1,1)) at the solution is (-1, 0) = -A^T).
"""

import numpy as np

from rcmopt import ProblemDef, solve, validate_problem

target = np.array([1.0, 1.0])

problem = ProblemDef(
    name="projection-onto-a-line",
    n=2,
    m=1,
    objective=lambda x: 0.5 * float((x - target) @ (x - target)),
    constraints=lambda x: np.array([x[0]]),
    start_point=np.array([0.7, -0.3]),
    gradient=lambda x: x - target,
    jacobian=lambda x: np.array([[1.0, 0.0]]),
)

# Always worth running: checks shapes and derivative consistency.
issues = validate_problem(problem)
print("validation issues:", issues or "none")

record = solve(problem)

print(f"status        {record.status.value}")
print(f"solution      {record.x_final}")
print(f"objective     {record.f_final:.8f}   (exact: 0.5)")
print(f"kkt residual  {record.kkt_residual:.2e}")
print(f"|c(x)|        {record.constraint_violation:.2e}")
print(f"iterations    {record.itc_feasibility} feasibility + {record.itc_main} main")

assert np.max(np.abs(record.x_final - np.array([0.0, 1.0]))) < 1e-6
print("matches the paper-and-pencil answer (0, 1)")
