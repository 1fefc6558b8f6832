"""Truncated series in t and in the Borel plane.

Three containers share one dense layout: a complex array whose row ``n`` holds
the x-polynomial coefficient of order ``n`` over a fixed list of monomials of
total degree ``<= max_degree`` in ``n_space`` variables.

* :class:`XPoly`  -- one truncated polynomial in x.
* :class:`TSeries` -- ``sum_n a_n(x) t^n`` for ``n = 0..N``.
* :class:`XiSeries` -- a level-``k`` Borel-plane series stored on the weighted
  basis ``e_a = xi^(a-k) / Gamma(a/k)``, ``a = 1..N``.  Row 0 is always zero.

Gamma weights are never multiplied into stored coefficients, so the formal
Borel/Laplace maps, acceleration and the Euler operator are all exact
relabelings or diagonal scalings.  Gamma only appears when a series is
evaluated numerically, and then through ``lgamma``.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
import io
import math
import os

import numpy as np
from scipy.special import gammaln

from .errors import DegeneracyError, DomainError, ParameterError

__all__ = [
    "Monomials",
    "monomials",
    "XPoly",
    "TSeries",
    "XiSeries",
    "GevreyFit",
    "ts_mul",
    "formal_borel",
    "formal_laplace",
    "accelerate_formal",
    "euler_apply",
    "euler_inverse",
    "gevrey_fit",
    "coefficient_norms",
    "dump_series",
    "load_series",
    "dumps_series",
    "loads_series",
]


class Monomials:
    """Monomials of total degree ``<= max_degree`` in ``n_space`` variables.

    Ordered by degree, then reverse-lexicographically inside a degree, so the
    constant monomial is index 0.  Holds the multiplication table and the
    derivative matrices used by every container.
    """

    def __init__(self, n_space, max_degree):
        if n_space < 1:
            raise ParameterError(f"n_space must be >= 1, got {n_space}")
        if max_degree < 0:
            raise ParameterError(f"max_degree must be >= 0, got {max_degree}")
        self.n_space = n_space
        self.max_degree = max_degree
        exps = []
        for d in range(max_degree + 1):
            level = set()
            for combo in combinations_with_replacement(range(n_space), d):
                e = [0] * n_space
                for j in combo:
                    e[j] += 1
                level.add(tuple(e))
            exps.extend(sorted(level, reverse=True))
        self.exps = tuple(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.size = len(exps)
        self.degrees = np.array([sum(e) for e in exps], dtype=int)

        pi, pj, pk = [], [], []
        for i, ei in enumerate(exps):
            for j, ej in enumerate(exps):
                if self.degrees[i] + self.degrees[j] <= max_degree:
                    pi.append(i)
                    pj.append(j)
                    pk.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        self.pair_i = np.array(pi, dtype=int)
        self.pair_j = np.array(pj, dtype=int)
        scatter = np.zeros((len(pk), self.size))
        scatter[np.arange(len(pk)), pk] = 1.0
        self.scatter = scatter

        self.diff = []
        for j in range(n_space):
            mat = np.zeros((self.size, self.size))
            for i, e in enumerate(exps):
                if e[j] > 0:
                    lower = list(e)
                    lower[j] -= 1
                    mat[i, self.index[tuple(lower)]] = e[j]
            self.diff.append(mat)

    def values(self, x):
        """Vector of monomial values at the point ``x``."""
        x = np.asarray(x, dtype=complex).reshape(-1)
        if x.size != self.n_space:
            raise ParameterError(f"expected a point with {self.n_space} coordinates, got {x.size}")
        out = np.ones(self.size, dtype=complex)
        for i, e in enumerate(self.exps):
            for xj, p in zip(x, e):
                if p:
                    out[i] *= xj**p
        return out


@lru_cache(maxsize=None)
def monomials(n_space, max_degree):
    return Monomials(n_space, max_degree)


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def _cauchy(a, b, mono):
    """Truncated product of two (rows, M) arrays: Cauchy in rows, polynomial in columns."""
    n = a.shape[0]
    p = a[:, mono.pair_i]
    q = b[:, mono.pair_j]
    acc = np.zeros_like(p)
    for r in range(n):
        row = p[r]
        if not row.any():
            continue
        acc[r:] += row * q[: n - r]
    return acc @ mono.scatter


def _dict_to_row(coeffs, mono):
    row = np.zeros(mono.size, dtype=complex)
    for e, c in coeffs.items():
        e = tuple(int(v) for v in e)
        if len(e) != mono.n_space:
            raise ParameterError(f"exponent {e} does not have {mono.n_space} entries")
        if any(v < 0 for v in e):
            raise ParameterError(f"negative exponent {e}")
        if sum(e) <= mono.max_degree:
            row[mono.index[e]] += c
    return row


def _row_to_dict(row, mono):
    return {mono.exps[i]: complex(row[i]) for i in np.flatnonzero(row)}


class XPoly:
    """A polynomial in ``x`` truncated at total degree ``max_degree``."""

    __slots__ = ("data", "n_space", "max_degree")

    def __init__(self, data, n_space=1, max_degree=0):
        mono = monomials(n_space, max_degree)
        data = _frozen(data).reshape(-1)
        if data.size != mono.size:
            raise ParameterError(f"XPoly data has {data.size} entries, expected {mono.size}")
        self.data = data
        self.n_space = n_space
        self.max_degree = max_degree

    @classmethod
    def from_dict(cls, coeffs, n_space=1, max_degree=0):
        """Build from ``{exponent tuple: value}``; terms above ``max_degree`` are dropped."""
        return cls(_dict_to_row(coeffs, monomials(n_space, max_degree)), n_space, max_degree)

    @classmethod
    def constant(cls, value, n_space=1, max_degree=0):
        return cls.from_dict({(0,) * n_space: value}, n_space, max_degree)

    @property
    def mono(self):
        return monomials(self.n_space, self.max_degree)

    @property
    def coeffs(self):
        return _row_to_dict(self.data, self.mono)

    def _check(self, other):
        if (self.n_space, self.max_degree) != (other.n_space, other.max_degree):
            raise ParameterError(
                f"x truncation mismatch: ({self.n_space}, {self.max_degree}) vs "
                f"({other.n_space}, {other.max_degree})"
            )

    def _new(self, data):
        return XPoly(data, self.n_space, self.max_degree)

    def __add__(self, other):
        if isinstance(other, XPoly):
            self._check(other)
            return self._new(self.data + other.data)
        return self + XPoly.constant(other, self.n_space, self.max_degree)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.data)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, XPoly):
            self._check(other)
            return self._new(_cauchy(self.data[None, :], other.data[None, :], self.mono)[0])
        return self._new(self.data * other)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, XPoly):
            return NotImplemented
        return (self.n_space, self.max_degree) == (other.n_space, other.max_degree) and np.array_equal(
            self.data, other.data
        )

    __hash__ = None

    def diff(self, j):
        """Exact partial derivative in ``x_j`` (0-based)."""
        return self._new(self.data @ self.mono.diff[j])

    def __call__(self, x):
        return complex(self.data @ self.mono.values(x))

    def max_abs(self):
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def is_zero(self):
        return not self.data.any()

    def __repr__(self):
        return f"XPoly({self.coeffs!r}, n_space={self.n_space}, max_degree={self.max_degree})"


class _Series:
    """Shared plumbing for :class:`TSeries` and :class:`XiSeries`."""

    __slots__ = ("data", "n_space", "max_degree")

    def __init__(self, data, n_space, max_degree):
        mono = monomials(n_space, max_degree)
        data = _frozen(data)
        if data.ndim != 2 or data.shape[1] != mono.size:
            raise ParameterError(f"series data must have shape (N+1, {mono.size}), got {data.shape}")
        if data.shape[0] < 1:
            raise ParameterError("series needs at least one row")
        self.data = data
        self.n_space = n_space
        self.max_degree = max_degree

    @property
    def order(self):
        return self.data.shape[0] - 1

    @property
    def mono(self):
        return monomials(self.n_space, self.max_degree)

    def _params(self):
        return (self.order, self.n_space, self.max_degree)

    def _check(self, other):
        if type(self) is not type(other):
            raise ParameterError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if self._params() != other._params():
            raise ParameterError(
                "truncation mismatch (order, n_space, max_degree): "
                f"{self._params()} vs {other._params()}"
            )

    def coeff(self, n):
        return XPoly(self.data[n], self.n_space, self.max_degree)

    def eval_x(self, x):
        """Scalar coefficient sequence obtained by evaluating every row at ``x``."""
        return self.data @ self.mono.values(x)

    def diff_x(self, j):
        return self._new(self.data @ self.mono.diff[j])

    def norms(self):
        """Max-modulus of each row's polynomial coefficients."""
        return np.max(np.abs(self.data), axis=1)

    def is_zero(self):
        return not self.data.any()

    def __neg__(self):
        return self._new(-self.data)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self._new(self.data * other)
        return NotImplemented

    def __rmul__(self, other):
        return self.__mul__(other)

    __hash__ = None


class TSeries(_Series):
    """Truncated series ``sum_{n=0}^N a_n(x) t^n`` with XPoly coefficients."""

    __slots__ = ()

    def _new(self, data):
        return TSeries(data, self.n_space, self.max_degree)

    @classmethod
    def zero(cls, order, n_space=1, max_degree=0):
        return cls(np.zeros((order + 1, monomials(n_space, max_degree).size)), n_space, max_degree)

    @classmethod
    def from_coeffs(cls, coeffs, order=None, n_space=None, max_degree=None):
        """Build from a list of XPoly (or scalars, with n_space/max_degree given)."""
        coeffs = list(coeffs)
        if n_space is None or max_degree is None:
            first = next((c for c in coeffs if isinstance(c, XPoly)), None)
            n_space = first.n_space if first is not None else 1
            max_degree = first.max_degree if first is not None else 0
        order = len(coeffs) - 1 if order is None else order
        mono = monomials(n_space, max_degree)
        data = np.zeros((order + 1, mono.size), dtype=complex)
        for n, c in enumerate(coeffs[: order + 1]):
            if isinstance(c, XPoly):
                if (c.n_space, c.max_degree) != (n_space, max_degree):
                    raise ParameterError("coefficient truncation differs from the series'")
                data[n] = c.data
            elif isinstance(c, dict):
                data[n] = _dict_to_row(c, mono)
            else:
                data[n, 0] = c
        return cls(data, n_space, max_degree)

    @classmethod
    def scalar(cls, values, order=None, n_space=1, max_degree=0):
        """x-independent series from a list of numbers."""
        return cls.from_coeffs(list(values), order=order, n_space=n_space, max_degree=max_degree)

    @property
    def coeffs(self):
        return [self.coeff(n) for n in range(self.order + 1)]

    def __add__(self, other):
        self._check(other)
        return self._new(self.data + other.data)

    def __mul__(self, other):
        if isinstance(other, TSeries):
            return ts_mul(self, other)
        return super().__mul__(other)

    def __eq__(self, other):
        if not isinstance(other, TSeries):
            return NotImplemented
        return self._params() == other._params() and np.array_equal(self.data, other.data)

    def shift(self, j):
        """Multiply by ``t**j`` and truncate."""
        if j < 0:
            raise ParameterError("shift must be nonnegative")
        out = np.zeros_like(self.data)
        if j <= self.order:
            out[j:] = self.data[: self.order + 1 - j]
        return self._new(out)

    def constant_term(self):
        return self.coeff(0)

    def without_constant(self):
        out = np.array(self.data)
        out[0] = 0
        return self._new(out)

    def __call__(self, t, x=None):
        """Evaluate the truncated polynomial in ``t`` (no resummation)."""
        x = np.zeros(self.n_space) if x is None else x
        c = self.eval_x(x)
        return complex(np.polynomial.polynomial.polyval(complex(t), c))

    def __repr__(self):
        return f"TSeries(order={self.order}, n_space={self.n_space}, max_degree={self.max_degree})"


class XiSeries(_Series):
    """Level-``k`` Borel-plane series ``sum_{a>=1} b_a(x) xi^(a-k)/Gamma(a/k)``."""

    __slots__ = ("level",)

    def __init__(self, level, data, n_space=1, max_degree=0):
        if not level > 0:
            raise ParameterError(f"level must be positive, got {level}")
        super().__init__(data, n_space, max_degree)
        if self.data[0].any():
            raise DomainError("XiSeries index starts at 1; row 0 must be zero")
        self.level = float(level)

    def _new(self, data):
        return XiSeries(self.level, data, self.n_space, self.max_degree)

    def _params(self):
        return (self.level, self.order, self.n_space, self.max_degree)

    @classmethod
    def zero(cls, level, order, n_space=1, max_degree=0):
        return cls(level, np.zeros((order + 1, monomials(n_space, max_degree).size)), n_space, max_degree)

    @classmethod
    def basis(cls, a, level, order, n_space=1, max_degree=0, coeff=1.0):
        """``coeff * e_a`` at the given level."""
        if not 1 <= a <= order:
            raise ParameterError(f"basis index {a} outside 1..{order}")
        out = np.zeros((order + 1, monomials(n_space, max_degree).size), dtype=complex)
        if isinstance(coeff, XPoly):
            out[a] = coeff.data
        else:
            out[a, 0] = coeff
        return cls(level, out, n_space, max_degree)

    @classmethod
    def scalar(cls, level, values, order=None, n_space=1, max_degree=0):
        """x-independent series from ``[b_1, b_2, ...]``."""
        values = list(values)
        order = len(values) if order is None else order
        out = np.zeros((order + 1, monomials(n_space, max_degree).size), dtype=complex)
        for a, v in enumerate(values[:order], start=1):
            out[a, 0] = v
        return cls(level, out, n_space, max_degree)

    @property
    def coeffs(self):
        """``[b_1, ..., b_N]`` as XPoly."""
        return [self.coeff(a) for a in range(1, self.order + 1)]

    def __add__(self, other):
        self._check(other)
        return self._new(self.data + other.data)

    def __eq__(self, other):
        if not isinstance(other, XiSeries):
            return NotImplemented
        return self._params() == other._params() and np.array_equal(self.data, other.data)

    def lowest_index(self):
        """Smallest ``a`` with ``b_a != 0`` (``None`` for the zero series)."""
        nz = np.flatnonzero(self.data.any(axis=1))
        return int(nz[0]) if nz.size else None

    def power_coefficients(self, x=None):
        """Taylor coefficients ``c_j`` of ``xi^(k-1) * g(xi)`` at the point ``x``.

        ``g(xi) = xi^(1-k) * sum_j c_j xi^j`` with ``c_j = b_{j+1}/Gamma((j+1)/k)``.
        """
        x = np.zeros(self.n_space) if x is None else x
        b = self.eval_x(x)[1:]
        a = np.arange(1, self.order + 1)
        return b * np.exp(-gammaln(a / self.level))

    def __call__(self, xi, x=None):
        """Numerically evaluate the truncated series at ``xi`` (principal branch)."""
        xi = np.asarray(xi, dtype=complex)
        c = self.power_coefficients(x)
        poly = np.polynomial.polynomial.polyval(xi, c)
        return xi ** (1.0 - self.level) * poly

    def __repr__(self):
        return (
            f"XiSeries(level={self.level}, order={self.order}, n_space={self.n_space}, "
            f"max_degree={self.max_degree})"
        )


def ts_mul(a, b):
    """Cauchy product of two t-series, truncated at their common order."""
    if not isinstance(a, TSeries) or not isinstance(b, TSeries):
        raise ParameterError("ts_mul expects two TSeries")
    a._check(b)
    return a._new(_cauchy(a.data, b.data, a.mono))


def formal_borel(f, k):
    """Formal k-Borel transform: ``t^n -> xi^(n-k)/Gamma(n/k)``, i.e. ``b_n = a_n``."""
    if not k > 0:
        raise ParameterError(f"level must be positive, got {k}")
    if f.data[0].any():
        raise DomainError(
            "series has a nonzero constant term; split off f(0, x) and transform f - f(0, x)"
        )
    return XiSeries(k, f.data, f.n_space, f.max_degree)


def formal_laplace(g):
    """Formal k-Laplace transform, the exact inverse of :func:`formal_borel`."""
    return TSeries(g.data, g.n_space, g.max_degree)


def accelerate_formal(g, k_to):
    """Formal acceleration to level ``k_to``: ``e_a^(k) -> e_a^(k_to)``, coefficients kept."""
    if not k_to > g.level:
        raise ParameterError(f"acceleration must raise the level ({g.level} -> {k_to})")
    return XiSeries(k_to, g.data, g.n_space, g.max_degree)


def _index_scale(g):
    return np.arange(g.order + 1, dtype=float)[:, None] + 1.0


def euler_apply(g):
    """Apply ``xi d/dxi + k + 1``; diagonal with eigenvalue ``a + 1`` on ``e_a``."""
    return g._new(g.data * _index_scale(g))


def euler_inverse(g):
    """Inverse Euler operator, ``v = xi^(-k-1) int_0^xi eta^k g(eta) d eta``."""
    return g._new(g.data / _index_scale(g))


def coefficient_norms(series):
    """Per-order sup of polynomial coefficient moduli (the norm proxy used by gevrey_fit)."""
    return series.norms()


@dataclass(frozen=True)
class GevreyFit:
    """Result of :func:`gevrey_fit`.

    ``k_est`` is ``math.inf`` and ``convergent`` is True when the fitted
    ``1/k`` falls below the threshold.
    """

    k_est: float
    M_est: float
    C_est: float
    residual: float
    convergent: bool
    inv_k: float

    def __str__(self):
        if self.convergent:
            return f"convergent (1/k = {self.inv_k:.4g}, C = {self.C_est:.4g})"
        return f"Gevrey order 1/k = {self.inv_k:.4g} (k = {self.k_est:.4g}), M = {self.M_est:.4g}, C = {self.C_est:.4g}"


def gevrey_fit(norms, threshold=0.05, min_points=8):
    """Fit ``norms[n] ~ M C^n Gamma(n/k + 1)``.

    By Stirling, ``log Gamma(n/k + 1) = (1/k) n log n + a n + (1/2) log n + b``,
    so ``log norms[n]`` is regressed on ``1, n, n log n, log n`` and the
    ``n log n`` slope estimates ``1/k``.  Zero entries (and ``n = 0``) are skipped.
    """
    norms = np.asarray(norms, dtype=float)
    if np.any(norms < 0) or not np.all(np.isfinite(norms)):
        raise ParameterError("norms must be finite and nonnegative")
    if not np.any(norms > 0):
        raise DegeneracyError("all norms are zero; nothing to fit")
    n = np.flatnonzero(norms > 0)
    n = n[n > 0]
    if n.size < min_points:
        raise ParameterError(f"need at least {min_points} nonzero norms, got {n.size}")
    y = np.log(norms[n])
    nf = n.astype(float)
    design = np.column_stack([np.ones(n.size), nf, nf * np.log(nf), np.log(nf)])
    sol, *_ = np.linalg.lstsq(design, y, rcond=None)
    log_m, log_c, inv_k = (float(v) for v in sol[:3])
    resid = float(np.sqrt(np.mean((design @ sol - y) ** 2)))
    convergent = inv_k < threshold
    k_est = math.inf if convergent else 1.0 / inv_k
    if inv_k > 0:
        # the n-slope of log Gamma(n/k + 1) is -(1 + log k)/k; move it back into C
        log_c += inv_k * (1.0 - math.log(inv_k))
    return GevreyFit(k_est, math.exp(log_m), math.exp(log_c), resid, convergent, inv_k)


_HEADER = "# multisum-series"


def dumps_series(series):
    """Serialize a TSeries/XiSeries to the line-oriented text format."""
    kind = type(series).__name__
    level = repr(series.level) if isinstance(series, XiSeries) else "none"
    lines = [
        f"{_HEADER}\tkind={kind}\tlevel={level}\torder={series.order}\t"
        f"n_space={series.n_space}\tmax_degree={series.max_degree}"
    ]
    exps = series.mono.exps
    for n, row in enumerate(series.data):
        for i in np.flatnonzero(row):
            c = complex(row[i])
            e = ",".join(str(v) for v in exps[i])
            lines.append(f"{n}\t{e}\t{c.real!r}\t{c.imag!r}")
    return "\n".join(lines) + "\n"


def loads_series(text):
    """Parse the output of :func:`dumps_series`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(_HEADER):
        raise ParameterError("missing series header line")
    meta = dict(field.split("=", 1) for field in lines[0].split("\t")[1:])
    try:
        kind = meta["kind"]
        order = int(meta["order"])
        n_space = int(meta["n_space"])
        max_degree = int(meta["max_degree"])
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"bad series header: {lines[0]!r}") from exc
    mono = monomials(n_space, max_degree)
    data = np.zeros((order + 1, mono.size), dtype=complex)
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParameterError(f"line {lineno}: expected 4 tab-separated fields")
        n = int(fields[0])
        e = tuple(int(v) for v in fields[1].split(",")) if fields[1] else ()
        if n > order or e not in mono.index:
            raise ParameterError(f"line {lineno}: index ({n}, {e}) outside the declared truncation")
        data[n, mono.index[e]] = complex(float(fields[2]), float(fields[3]))
    if kind == "TSeries":
        return TSeries(data, n_space, max_degree)
    if kind == "XiSeries":
        return XiSeries(float(meta["level"]), data, n_space, max_degree)
    raise ParameterError(f"unknown series kind {kind!r}")


def dump_series(series, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_series(series))


def load_series(path):
    if isinstance(path, (str, os.PathLike)):
        with open(path, encoding="utf-8") as fh:
            return loads_series(fh.read())
    if isinstance(path, io.TextIOBase):
        return loads_series(path.read())
    raise ParameterError("load_series expects a path or a text stream")
