"""The k-convolution product.

On the weighted basis the product is exact: ``e_a * e_b = e_{a+b}`` because
``int_0^xi (xi^k - eta^k)^(a/k-1) eta^(b-k) d eta^k = xi^(a+b-k) B(a/k, b/k)``
and ``B(a/k, b/k) = Gamma(a/k) Gamma(b/k) / Gamma((a+b)/k)``.  For sampled
functions :func:`conv_numeric` integrates along the ray of ``xi`` after the
substitution ``s = eta^k / xi^k``, which turns the integral into a Beta-type
integral handled by Gauss-Jacobi rules.
"""

from dataclasses import dataclass
from functools import reduce
import math

import numpy as np

from ._quad import call_vectorized, gauss_jacobi_unit
from .errors import DomainError, ParameterError
from .series_core import XiSeries, _cauchy

__all__ = ["GrowthBound", "conv", "conv_power", "conv_numeric"]


@dataclass(frozen=True)
class GrowthBound:
    """``|phi(xi)| <= C |xi|^(s-k) exp(c |xi|^kappa) / Gamma(s/k)``."""

    C: float
    s: float
    c: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise ParameterError("GrowthBound needs s > 0")
        if self.C < 0 or self.c < 0 or not self.kappa > 0:
            raise ParameterError("GrowthBound constants must be nonnegative (kappa positive)")

    def value(self, xi, k):
        r = abs(xi)
        return self.C * r ** (self.s - k) * math.exp(self.c * r**self.kappa - math.lgamma(self.s / k))

    def convolved(self, other):
        """Bound for the k-convolution of two functions with these bounds."""
        if (self.c, self.kappa) != (other.c, other.kappa):
            raise ParameterError("convolved bounds must share the exponential part")
        return GrowthBound(self.C * other.C, self.s + other.s, self.c, self.kappa)


def conv(a, b):
    """Exact k-convolution of two XiSeries, truncated at their common order."""
    if not isinstance(a, XiSeries) or not isinstance(b, XiSeries):
        raise ParameterError("conv expects two XiSeries")
    if a.level != b.level:
        raise ParameterError(f"level mismatch: {a.level} vs {b.level}")
    a._check(b)
    return a._new(_cauchy(a.data, b.data, a.mono))


def conv_power(factors):
    """Left fold of :func:`conv` over a nonempty list."""
    factors = list(factors)
    if not factors:
        raise ParameterError("conv_power needs at least one factor (the basis has no unit)")
    return reduce(conv, factors)


def _power_at_origin(phi, direction, scale):
    lo = phi(np.array([1e-7 * scale * direction]))[0]
    hi = phi(np.array([2e-7 * scale * direction]))[0]
    if lo == 0 or hi == 0:
        return None
    return math.log(abs(hi) / abs(lo)) / math.log(2.0)


def conv_numeric(phi1, phi2, k, xi, powers=None, tol=1e-12):
    """``int_0^xi phi1((xi^k - eta^k)^(1/k)) phi2(eta) d eta^k`` along ``arg eta = arg xi``.

    ``powers = (p1, p2)`` gives the behaviour ``phi_i(z) ~ z^p_i`` at the
    origin, which fixes the Jacobi weight; when omitted it is estimated from two
    samples close to 0.  Returns ``(value, error_estimate)``.
    """
    xi = complex(xi)
    if xi == 0:
        return 0j, 0.0
    r = abs(xi)
    direction = xi / r
    f1 = lambda z: call_vectorized(phi1, z)
    f2 = lambda z: call_vectorized(phi2, z)
    if powers is None:
        p1 = _power_at_origin(f1, direction, r)
        p2 = _power_at_origin(f2, direction, r)
        if p1 is None or p2 is None:
            # a factor vanishing at the origin to all sampled precision: fall back to weight 0
            p1 = 0.0 if p1 is None else p1
            p2 = 0.0 if p2 is None else p2
    else:
        p1, p2 = powers
    alpha, beta = p1 / k, p2 / k
    if alpha <= -1 or beta <= -1:
        raise DomainError(f"integrand not integrable at an endpoint (exponents {alpha:.3g}, {beta:.3g})")

    xik = r**k * direction**k  # xi^k along the ray, principal branch of direction

    def h(s):
        s = np.asarray(s, dtype=float)
        z1 = r * (1.0 - s) ** (1.0 / k) * direction
        z2 = r * s ** (1.0 / k) * direction
        return f1(z1) * f2(z2) / ((1.0 - s) ** alpha * s**beta)

    val, err = gauss_jacobi_unit(h, alpha, beta, tol=tol)
    return xik * val, abs(xik) * err
