"""A nonlinear PDE with divergent forcing: d_t u = u d_x u + A(t), u(0, x) = x.

Without the forcing the solution is x / (1 - t).  The Euler series A(t) makes
the formal solution divergent in t.  We resum it on a small (t, x) grid and
check that the result satisfies the PDE with finite differences.
"""

import numpy as np

from multisum import MultiLevel, residual_check, resum
from multisum.fixtures import burgers_problem

problem = burgers_problem(order=40, max_degree=2)
ml = MultiLevel.single(1.0, 0.0)

ts = [0.05, 0.1, 0.2]
xs = [[-0.5], [0.0], [0.5]]
table = resum(problem, ml, ts, x_points=xs)
print("   t      x      u(t, x)            unforced   err_est")
for row in table.rows:
    t, x = row.t.real, row.x[0]
    print(f"{t:5.2f}  {x:5.2f}  {row.values[0].real:+.15f}  {x / (1 - t):+.6f}  {row.err_est:.1e}")

# PDE residual by central differences (step 1e-4 in t and x)
report = residual_check(table, problem, 1e-4, ml)
print(f"\nmax PDE residual {report.max_residual:.2e}")

# a perturbed solution does not satisfy the equation
bad = residual_check(table.perturbed(1e-3), problem, 1e-4, ml)
print(f"max residual after a 1e-3 perturbation {bad.max_residual:.2e}")
