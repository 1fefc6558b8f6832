"""Small quadrature kernels: adaptive Gauss-Legendre panels and Gauss-Jacobi."""

from functools import lru_cache
import heapq

import numpy as np
from scipy.special import roots_jacobi

from .errors import NumericFailure


@lru_cache(maxsize=None)
def _legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _jacobi(n, alpha, beta):
    x, w = roots_jacobi(n, alpha, beta)
    return x, w


def call_vectorized(f, z):
    """Call ``f`` on an array; fall back to a loop for scalar-only callables."""
    z = np.asarray(z)
    try:
        out = np.asarray(f(z), dtype=complex)
    except TypeError:
        out = None
    if out is None or out.shape != z.shape:
        out = np.array([complex(f(v)) for v in z.reshape(-1)], dtype=complex).reshape(z.shape)
    return out


def _panel(f, a, b, n):
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * np.dot(w, call_vectorized(f, mid + half * x))


def adaptive_gl(f, a, b, abstol=0.0, reltol=1e-12, nodes=16, max_panels=4000):
    """Integrate ``f`` over ``[a, b]`` with globally adaptive Gauss-Legendre panels.

    Each panel's error is estimated as the difference between its one-panel
    value and the sum over its two halves.  Returns ``(value, error)``.
    """
    def split(lo, hi, coarse):
        m = 0.5 * (lo + hi)
        left = _panel(f, lo, m, nodes)
        right = _panel(f, m, hi, nodes)
        fine = left + right
        return [(-abs(fine - coarse), lo, hi, fine, left, right)]

    whole = _panel(f, a, b, nodes)
    heap = split(a, b, whole)
    total = heap[0][3]
    err = -heap[0][0]
    count = 1
    while err > max(abstol, reltol * abs(total)):
        if count >= max_panels:
            raise NumericFailure(
                f"adaptive quadrature stalled at error {err:.3g} after {count} panels", estimate=err
            )
        neg_e, lo, hi, fine, left, right = heapq.heappop(heap)
        m = 0.5 * (lo + hi)
        for item in split(lo, m, left) + split(m, hi, right):
            heapq.heappush(heap, item)
        count += 1
        total = sum(item[3] for item in heap)
        err = sum(-item[0] for item in heap)
    return complex(total), float(err)


def gauss_jacobi_unit(h, alpha, beta, tol=1e-12, n0=16, n_max=1024):
    """``int_0^1 (1-s)^alpha s^beta h(s) ds`` with p-refined Gauss-Jacobi rules.

    ``h`` should be smooth on ``[0, 1]``.  Returns ``(value, error)`` where the
    error is the difference between the last two rule sizes.
    """
    scale = 2.0 ** (-alpha - beta - 1.0)

    def rule(n):
        x, w = _jacobi(n, float(alpha), float(beta))
        return scale * np.dot(w, call_vectorized(h, 0.5 * (1.0 + x)))

    n = n0
    prev = rule(n)
    while True:
        n *= 2
        cur = rule(n)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)) or err == 0.0:
            return complex(cur), float(err)
        if n >= n_max:
            raise NumericFailure(f"Gauss-Jacobi rule did not settle (error {err:.3g})", estimate=err)
        prev = cur
