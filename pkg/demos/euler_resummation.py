"""Borel-Laplace resummation of a Cauchy problem with divergent Euler data.

The problem is d_t u = A(t) (1 + u), u(0) = 0, where A(t) = sum (-1)^n n! t^(n+1)
diverges for every t != 0.  Its formal solution diverges as well, but it is
1-summable in every direction except the negative real axis.  The exact sum is
u(t) = exp(int_0^t A) - 1 with A the Borel sum of the data, which we compare against.
"""

import numpy as np
from scipy.integrate import quad

from multisum import MultiLevel, formal_borel, gevrey_fit, resum
from multisum.cauchy_solver import solution_series
from multisum.fixtures import euler_problem


def A(s):
    # A(s) = s int_0^inf e^-y / (1 + s y) dy, the Borel-Laplace sum of the Euler series
    return s * quad(lambda y: np.exp(-y) / (1 + s * y), 0, np.inf, epsabs=1e-300, epsrel=1e-13)[0]


def exact(t):
    integral, _ = quad(A, 0.0, t, epsabs=1e-300, epsrel=1e-13, limit=200)
    return np.expm1(integral)


problem = euler_problem(40)
u_hat = solution_series(problem)[0]
coeffs = np.array([u_hat.coeff(n)(np.zeros(1)) for n in range(41)])
print("first coefficients of the formal solution:", coeffs[:6].real.round(6))

# the coefficients grow like n!, i.e. Gevrey order 1
fit = gevrey_fit(u_hat.norms())
print(f"fitted Gevrey level k = {fit.k_est:.4f}")

# the Borel transform has a single pole at xi = -1
v_borel = formal_borel(u_hat, 1.0)
print("Borel transform, first basis coefficients:", np.real(v_borel.data[:6]).ravel().round(6))

ts = [0.05, 0.1, 0.2, 0.3]
table = resum(problem, MultiLevel.single(1.0, 0.0), ts)
print("\n   t      resummed              exact                 |diff|     err_est")
for row in table.rows:
    t = row.t.real
    ref = exact(t)
    print(f"{t:5.2f}  {row.values[0].real:.16f}  {ref:.16f}  {abs(row.values[0] - ref):.1e}  {row.err_est:.1e}")

# a complex t inside the sector of summability
t = 0.2 * np.exp(0.8j)
print("\nat t = 0.2 e^(0.8i):", resum(problem, MultiLevel.single(1.0, 0.8), [t]).rows[0].values[0])
