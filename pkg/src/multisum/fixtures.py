"""Reference problems used by the tests, the demos and the bundled problem files."""

import math

import numpy as np
from scipy.special import gammaln

from .cauchy_solver import CauchyProblem, MultiLevel, TermIndex
from .series_core import TSeries, XPoly

__all__ = [
    "euler_series",
    "two_level_series",
    "two_level_borel_coefficients",
    "exp_problem",
    "euler_problem",
    "euler_shifted_problem",
    "two_level_problem",
    "burgers_problem",
    "system_problem",
    "two_var_problem",
    "ALL_FIXTURES",
]


def euler_series(order, n_space=1, max_degree=0):
    """``sum_{n>=0} (-1)^n n! t^(n+1)``; its level-1 Borel transform is ``1/(1+xi)``."""
    vals = [0.0] + [(-1) ** n * math.factorial(n) for n in range(order)]
    return TSeries.scalar(vals, order, n_space, max_degree)


def two_level_series(order):
    """``sum (-1)^n Gamma(n+1) t^(n+1) + sum (-1)^n Gamma(n/2+1) t^(n+1)``: levels 1 and 2."""
    vals = [0.0] + [(-1) ** n * (math.factorial(n) + math.exp(gammaln(n / 2 + 1))) for n in range(order)]
    return TSeries.scalar(vals, order)


def two_level_borel_coefficients(order, dps=100):
    """Taylor coefficients of the level-1 Borel transform of :func:`two_level_series`, in mpmath.

    ``c_n = (-1)^n (1 + Gamma(n/2+1)/n!)``: the level-2 part drops below double
    precision relative to the level-1 part after about 20 terms, so growth
    studies need these extended-precision values.
    """
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = dps
    return [(-1) ** n * (1 + ctx.gamma(ctx.mpf(n) / 2 + 1) / ctx.factorial(n)) for n in range(order)]


def _scalar_problem(terms, u0, order, n_space=1, max_degree=0):
    init = XPoly.from_dict(u0, n_space, max_degree) if isinstance(u0, dict) else XPoly.constant(u0, n_space, max_degree)
    return CauchyProblem(1, n_space, [terms], [init], order, max_degree)


def exp_problem(order=30):
    """``d_t u = u``, ``u(0) = 1``: solution ``e^t`` (convergent)."""
    one = TSeries.scalar([1.0], order)
    return _scalar_problem({TermIndex.of(1, 1, u=[0]): one}, 1.0, order)


def euler_problem(order=40):
    """``d_t u = A(t) (1 + u)``, ``u(0) = 0``, ``A`` the Euler series."""
    A = euler_series(order)
    return _scalar_problem({TermIndex.zero(1, 1): A, TermIndex.of(1, 1, u=[0]): A}, 0.0, order)


def euler_shifted_problem(order=40):
    """Same with ``A(t) = sum (-1)^n n! t^n`` (the Euler series divided by t)."""
    vals = [(-1) ** n * math.factorial(n) for n in range(order + 1)]
    A = TSeries.scalar(vals, order)
    return _scalar_problem({TermIndex.zero(1, 1): A, TermIndex.of(1, 1, u=[0]): A}, 0.0, order)


def two_level_problem(order=40):
    """``d_t u = f(t)``, ``u(0) = 0`` with the two-level data of :func:`two_level_series`."""
    return _scalar_problem({TermIndex.zero(1, 1): two_level_series(order)}, 0.0, order)


def burgers_problem(order=40, max_degree=2):
    """``d_t u = u d_x u + A(t)``, ``u(0, x) = x``: nonlinear PDE with divergent forcing."""
    one = TSeries.scalar([1.0], order, 1, max_degree)
    terms = {
        TermIndex.of(1, 1, u=[0], p=[(0, 0)]): one,
        TermIndex.zero(1, 1): euler_series(order, 1, max_degree),
    }
    return _scalar_problem(terms, {(1,): 1.0}, order, 1, max_degree)


def system_problem(order=30, max_degree=16):
    """Two unknowns: ``d_t u1 = u2 d_x u1 + A(t)``, ``d_t u2 = u1^2 + x``; ``u(0) = (x, 1)``."""
    ns, D = 1, max_degree
    one = TSeries.scalar([1.0], order, ns, D)
    x_series = TSeries.from_coeffs([XPoly.from_dict({(1,): 1.0}, ns, D)], order, ns, D)
    eq1 = {
        TermIndex.of(2, 1, u=[1], p=[(0, 0)]): one,
        TermIndex.zero(2, 1): euler_series(order, ns, D),
    }
    eq2 = {TermIndex.of(2, 1, u=[0, 0]): one, TermIndex.zero(2, 1): x_series}
    init = [XPoly.from_dict({(1,): 1.0}, ns, D), XPoly.constant(1.0, ns, D)]
    return CauchyProblem(2, ns, [eq1, eq2], init, order, D)


def two_var_problem(order=10, max_degree=6):
    """``d_t u = (d_x1 u)(d_x2 u) + t``, ``u(0, x) = x1 + x2^2`` in two space variables."""
    ns, D = 2, max_degree
    one = TSeries.scalar([1.0], order, ns, D)
    t_series = TSeries.scalar([0.0, 1.0], order, ns, D)
    terms = {TermIndex.of(1, 2, p=[(0, 0), (0, 1)]): one, TermIndex.zero(1, 2): t_series}
    return _scalar_problem(terms, {(1, 0): 1.0, (0, 2): 1.0}, order, ns, D)


ALL_FIXTURES = {
    "exp": (exp_problem, MultiLevel.single(1.0, 0.0)),
    "euler": (euler_problem, MultiLevel.single(1.0, 0.0)),
    "euler_shifted": (euler_shifted_problem, MultiLevel.single(1.0, 0.0)),
    "two_level": (two_level_problem, MultiLevel((1.0, 2.0), (0.0, 0.0))),
    "burgers": (burgers_problem, MultiLevel.single(1.0, 0.0)),
    "system": (system_problem, MultiLevel.single(1.0, 0.0)),
    "two_var": (two_var_problem, MultiLevel.single(1.0, 0.0)),
}
