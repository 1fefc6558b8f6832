"""Multisummation with two levels k1 = 1 < k2 = 2.

The data f(t) = sum (-1)^n (n! + Gamma(n/2 + 1)) t^(n+1) mixes a level-1 and a
level-2 divergent part.  Its level-1 Borel transform is not of exponential
growth: along most rays it grows like exp(c |xi|^2), i.e. with order
kappa_1 = 1/(1/k1 - 1/k2) = 2.  The acceleration chain 1 -> 2 handles this.
"""

import math

import numpy as np
from scipy.integrate import quad

from multisum import MultiLevel, resum
from multisum.borel_laplace import fit_growth_order, pade_extended
from multisum.fixtures import exp_problem, two_level_borel_coefficients, two_level_problem

# growth of the level-1 Borel transform, continued in extended precision
coeffs = two_level_borel_coefficients(100, dps=100)
f = pade_extended(coeffs, 98, 1, dps=100)
# along theta = 0 and pi/2 the function stays bounded; the fit reports order 0 there
for theta in (0.0, math.pi / 2, math.pi - 0.35):
    try:
        kappa, _ = fit_growth_order(f, theta, np.linspace(2.0, 8.0, 40))
        print(f"growth order along theta = {theta:.3f}: {kappa:.3f}")
    except ValueError as exc:
        print(f"growth order along theta = {theta:.3f}: {exc}")

# reference: u(t) = int_0^t [A(s) + s int_0^inf e^-y / (1 + s sqrt y) dy] ds,
# with A(s) = s int_0^inf e^-y / (1 + s y) dy the Euler function
def f_exact(s):
    euler = quad(lambda y: np.exp(-y) / (1 + s * y), 0, np.inf, epsabs=1e-300, epsrel=1e-12)[0]
    second = quad(lambda y: np.exp(-y) / (1 + s * np.sqrt(y)), 0, np.inf, epsabs=1e-300, epsrel=1e-12)[0]
    return s * (euler + second)


def exact(t):
    return quad(f_exact, 0.0, t, epsabs=1e-300, epsrel=1e-13)[0]


ml = MultiLevel((1.0, 2.0), (0.0, 0.0))
table = resum(two_level_problem(), ml, [0.05, 0.1, 0.2, 0.3])
print("\n   t      multisum            |diff to quadrature|  err_est   flags")
for row in table.rows:
    diff = abs(row.values[0] - exact(row.t.real))
    print(f"{row.t.real:5.2f}  {row.values[0].real:.16f}  {diff:.1e}           {row.err_est:.1e}   {row.stage_flags}")

# on a convergent problem the chain must agree with plain summation
ts = [0.1, 0.2, 0.3]
single = resum(exp_problem(), MultiLevel.single(1.0, 0.0), ts).values()
chain = resum(exp_problem(), ml, ts).values()
print("\nexp fixture, chain vs single level:", float(np.max(np.abs(single - chain))))
