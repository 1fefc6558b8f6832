"""Nonlinear Cauchy problems ``d_t u_i = f_i(t, x, U, grad_x U)``.

Pipeline
--------
1. :func:`normalize` removes the affine part of the solution,
   ``u_i = u_i(0, x) + t d_t u_i(0, x) + t v_i``, and rewrites the right-hand
   side as ``g_i(t, x, V, P) = sum g_{i,alpha,A}(t, x) V^alpha P^A`` with
   ``g_{i,alpha,A} = t^(|alpha|+|A|) F_{i,alpha,A}`` and ``g_{i,0,0}(0, x) = 0``.
   The unknowns then satisfy ``d_t (t v_i) = g_i(t, x, V, grad V)``.
2. :func:`formal_solve` runs the Cauchy-Kowalevskaya recursion on that form.
3. :func:`convolution_fixpoint` solves the Borel-plane equation
   ``(xi d_xi + k + 1) v_hat = g_hat(xi, x, v_hat, grad v_hat)`` (products
   become k-convolutions) grade by grade in an auxiliary parameter ``eps``;
   grade ``l`` has Borel index ``>= l``.
4. :func:`resum` accelerates the Borel series through the levels, continues
   it with Pade approximants and takes the final Laplace integral.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np

from .borel_laplace import SectorSpec, angle_diff, laplace_eval_regular, pade_from_coefficients
from .convolution import conv, conv_power
from .errors import (
    DegeneracyError,
    DirectionRejected,
    DomainError,
    NumericFailure,
    ParameterError,
    TruncationError,
)
from .series_core import TSeries, XiSeries, XPoly, euler_inverse, formal_borel, monomials, ts_mul

__all__ = [
    "TermIndex",
    "CauchyProblem",
    "NormalizedProblem",
    "MultiLevel",
    "EpsGraded",
    "SolverSettings",
    "SolutionRow",
    "SolutionTable",
    "ResidualReport",
    "normalize",
    "unnormalize",
    "formal_solve",
    "solution_series",
    "borel_tshift",
    "borel_terms",
    "sigma_assignments",
    "assemble_G",
    "convolution_fixpoint",
    "borel_sum_series",
    "resum",
    "residual_check",
]


@dataclass(frozen=True, order=True)
class TermIndex:
    """Exponents of ``U^alpha P^A``; ``A[i][j]`` is the power of ``d_{x_j} u_i``."""

    alpha: tuple
    A: tuple

    def __post_init__(self):
        alpha = tuple(int(a) for a in self.alpha)
        A = tuple(tuple(int(v) for v in row) for row in self.A)
        if len(A) != len(alpha):
            raise ParameterError(f"A has {len(A)} rows but alpha has {len(alpha)} entries")
        if len({len(row) for row in A}) > 1:
            raise ParameterError("rows of A must all have length n_space")
        if any(a < 0 for a in alpha) or any(v < 0 for row in A for v in row):
            raise ParameterError("term exponents must be nonnegative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "A", A)

    @classmethod
    def zero(cls, m, n_space):
        return cls((0,) * m, ((0,) * n_space,) * m)

    @classmethod
    def of(cls, m, n_space, u=(), p=()):
        """Build from lists of unknown indices ``u`` and ``(i, j)`` gradient pairs."""
        alpha = [0] * m
        A = [[0] * n_space for _ in range(m)]
        for i in u:
            alpha[i] += 1
        for i, j in p:
            A[i][j] += 1
        return cls(tuple(alpha), tuple(tuple(r) for r in A))

    @property
    def m(self):
        return len(self.alpha)

    @property
    def n_space(self):
        return len(self.A[0]) if self.A else 0

    @property
    def abs_alpha(self):
        return sum(self.alpha)

    @property
    def abs_A(self):
        return sum(sum(row) for row in self.A)

    @property
    def degree(self):
        return self.abs_alpha + self.abs_A

    def slots(self):
        """One ``(i, j)`` entry per factor; ``j`` is None for a plain ``u_i``."""
        out = []
        for i, a in enumerate(self.alpha):
            out.extend([(i, None)] * a)
        for i, row in enumerate(self.A):
            for j, a in enumerate(row):
                out.extend([(i, j)] * a)
        return out

    def __str__(self):
        return f"alpha={list(self.alpha)} A={[list(r) for r in self.A]}"


def _check_series_params(series_list, order, n_space, max_degree):
    for s in series_list:
        if (s.order, s.n_space, s.max_degree) != (order, n_space, max_degree):
            raise ParameterError(
                f"term series truncation {(s.order, s.n_space, s.max_degree)} differs from "
                f"the problem's {(order, n_space, max_degree)}"
            )


@dataclass
class CauchyProblem:
    """``d_t u_i = sum_{(alpha, A)} f_{i,alpha,A}(t, x) U^alpha P^A``, ``u_i(0, x) = initial[i]``.

    ``terms[i]`` maps :class:`TermIndex` to a :class:`TSeries`; all series and
    initial polynomials share ``order``, ``n_space`` and ``max_degree``.
    ``R0``, ``R1`` are the radii of the data's domain in ``t`` and ``x``.
    """

    m: int
    n_space: int
    terms: list
    initial: list
    order: int
    max_degree: int
    R0: float = 1.0
    R1: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n_space < 1:
            raise ParameterError("m and n_space must be >= 1")
        if len(self.terms) != self.m or len(self.initial) != self.m:
            raise ParameterError("need one term map and one initial polynomial per unknown")
        for i, tm in enumerate(self.terms):
            for key, series in tm.items():
                if not isinstance(key, TermIndex) or (key.m, key.n_space) != (self.m, self.n_space):
                    raise ParameterError(f"equation {i}: bad term index {key}")
            _check_series_params(tm.values(), self.order, self.n_space, self.max_degree)
        for p in self.initial:
            if (p.n_space, p.max_degree) != (self.n_space, self.max_degree):
                raise ParameterError("initial data truncation differs from the problem's")
        if not (self.R0 > 0 and self.R1 > 0):
            raise ParameterError("radii must be positive")

    @property
    def mono(self):
        return monomials(self.n_space, self.max_degree)

    def zero_tseries(self):
        return TSeries.zero(self.order, self.n_space, self.max_degree)

    def evaluate_rhs(self, i, coeff_values, U, P):
        """``f_i`` at numeric values; ``coeff_values[key]`` holds ``f_{i,key}(t, x)``."""
        total = 0j
        for key, c in coeff_values.items():
            term = complex(c)
            for r, a in enumerate(key.alpha):
                if a:
                    term *= U[r] ** a
            for r, row in enumerate(key.A):
                for j, a in enumerate(row):
                    if a:
                        term *= P[r][j] ** a
            total += term
        return total


@dataclass
class NormalizedProblem:
    """The g-form of a problem plus the affine part removed by :func:`normalize`.

    ``F[r]`` holds the coefficients before the ``t^(|alpha|+|A|)`` dressing,
    ``terms[r]`` the dressed ``g_{r,alpha,A}``.  ``u0``/``u1`` are
    ``u_r(0, x)`` and ``d_t u_r(0, x)``.
    """

    m: int
    n_space: int
    order: int
    max_degree: int
    terms: list
    F: list
    u0: list
    u1: list
    source: CauchyProblem = None

    def zero_tseries(self):
        return TSeries.zero(self.order, self.n_space, self.max_degree)


def _tpoly_const(p, order):
    """The XPoly ``p`` as a t-constant series."""
    data = np.zeros((order + 1, p.data.size), dtype=complex)
    data[0] = p.data
    return TSeries(data, p.n_space, p.max_degree)


def _ts_power(base, e, one):
    out = one
    for _ in range(e):
        out = ts_mul(out, base)
    return out


def _xpoly_power(base, e, one):
    out = one
    for _ in range(e):
        out = out * base
    return out


def normalize(p):
    """Reduce ``p`` to ``d_t (t v) = g(t, x, V, grad V)`` with ``g_{.,0,0}(0, x) = 0``."""
    if not isinstance(p, CauchyProblem):
        raise ParameterError("normalize expects a CauchyProblem")
    N, ns, D, m = p.order, p.n_space, p.max_degree, p.m
    for i, tm in enumerate(p.terms):
        for key in tm:
            if key.degree > N:
                raise TruncationError(
                    f"equation {i}: term {key} is shifted by t^{key.degree}, beyond order {N}",
                    required=key.degree,
                )
    one_x = XPoly.constant(1.0, ns, D)
    u0 = list(p.initial)
    grad0 = [[u0[i].diff(j) for j in range(ns)] for i in range(m)]

    # d_t u_i(0, x) = f_i(0, x, u0, grad u0)
    u1 = []
    for i in range(m):
        acc = XPoly.constant(0.0, ns, D)
        for key, series in p.terms[i].items():
            term = series.coeff(0)
            for r, a in enumerate(key.alpha):
                term = term * _xpoly_power(u0[r], a, one_x)
            for r, row in enumerate(key.A):
                for j, a in enumerate(row):
                    term = term * _xpoly_power(grad0[r][j], a, one_x)
            acc = acc + term
        u1.append(acc)

    one = _tpoly_const(one_x, N)
    # base values a_r = u0_r + t u1_r and their gradients
    base_u = [_tpoly_const(u0[r], N) + _tpoly_const(u1[r], N).shift(1) for r in range(m)]
    base_p = [[base_u[r].diff_x(j) for j in range(ns)] for r in range(m)]

    F = []
    for i in range(m):
        acc = {}
        for key, series in p.terms[i].items():
            ranges = [range(a + 1) for a in key.alpha] + [range(a + 1) for row in key.A for a in row]
            flat_A = [a for row in key.A for a in row]
            for choice in product(*ranges):
                beta = choice[:m]
                B_flat = choice[m:]
                weight = 1.0
                piece = series
                for r in range(m):
                    weight *= math.comb(key.alpha[r], beta[r])
                    rest = key.alpha[r] - beta[r]
                    if rest:
                        piece = ts_mul(piece, _ts_power(base_u[r], rest, one))
                for idx, (a, b) in enumerate(zip(flat_A, B_flat)):
                    weight *= math.comb(a, b)
                    rest = a - b
                    if rest:
                        r, j = divmod(idx, ns)
                        piece = ts_mul(piece, _ts_power(base_p[r][j], rest, one))
                B = tuple(tuple(B_flat[r * ns:(r + 1) * ns]) for r in range(m))
                new_key = TermIndex(tuple(beta), B)
                piece = piece * weight
                acc[new_key] = acc[new_key] + piece if new_key in acc else piece
        zero_key = TermIndex.zero(m, ns)
        shift_u1 = _tpoly_const(u1[i], N)
        acc[zero_key] = acc[zero_key] - shift_u1 if zero_key in acc else -shift_u1
        F.append({key: s for key, s in acc.items() if not s.is_zero()})

    terms = []
    for i in range(m):
        g = {key: s.shift(key.degree) for key, s in F[i].items()}
        g = {key: s for key, s in g.items() if not s.is_zero()}
        zero_key = TermIndex.zero(m, ns)
        if zero_key in g and np.max(np.abs(g[zero_key].data[0])) > 1e-12 * (1 + g[zero_key].norms().max()):
            raise AssertionError("normalization left g(0, x, 0, 0) != 0")
        if zero_key in g:
            data = np.array(g[zero_key].data)
            data[0] = 0
            g[zero_key] = TSeries(data, ns, D)
        terms.append(g)
    return NormalizedProblem(m, ns, N, D, terms, F, u0, u1, p)


def unnormalize(np_, v):
    """``u_r = u0_r + t (u1_r + v_r)`` as TSeries (inverse of the normalization)."""
    N = np_.order
    out = []
    for r in range(np_.m):
        inner = _tpoly_const(np_.u1[r], N) + v[r]
        out.append(_tpoly_const(np_.u0[r], N) + inner.shift(1))
    return out


def _rhs(np_, r, V, gradV, one):
    """``g_r(t, x, V, grad V)`` as a truncated series."""
    total = np_.zero_tseries()
    for key, g in np_.terms[r].items():
        term = g
        for i, j in key.slots():
            term = ts_mul(term, V[i] if j is None else gradV[i][j])
        total = total + term
    return total


def formal_solve(np_, N=None):
    """Coefficients ``v_{r,n}(x)`` of the formal solution of ``d_t (t v) = g``.

    Order ``n`` of the left side is ``(n+1) v_n``; the right side at order ``n``
    only involves ``v_m``, ``m < n``, because every ``g_{r,alpha,A}`` with
    ``|alpha|+|A| >= 1`` carries ``t^(|alpha|+|A|)`` and ``g_{r,0,0}(0) = 0``.
    Returns ``m`` TSeries of the problem's order (entries above ``N`` are zero).
    """
    N = np_.order if N is None else N
    if N > np_.order:
        raise TruncationError(f"order {N} exceeds the problem's truncation {np_.order}", required=N)
    m, ns = np_.m, np_.n_space
    one = _tpoly_const(XPoly.constant(1.0, ns, np_.max_degree), np_.order)
    data = [np.zeros((np_.order + 1, monomials(ns, np_.max_degree).size), dtype=complex) for _ in range(m)]
    for n in range(1, N + 1):
        V = [TSeries(d, ns, np_.max_degree) for d in data]
        gradV = [[V[i].diff_x(j) for j in range(ns)] for i in range(m)]
        rows = [_rhs(np_, r, V, gradV, one).data[n] for r in range(m)]
        for r in range(m):
            data[r][n] = rows[r] / (n + 1)
    return [TSeries(d, ns, np_.max_degree) for d in data]


def solution_series(p, N=None):
    """Formal solution ``u`` of the original problem, up to order ``N``."""
    np_ = normalize(p)
    return unnormalize(np_, formal_solve(np_, N))


def borel_tshift(f_hat, j):
    """Borel image of multiplication by ``t^j``: convolution with ``e_j``."""
    if j < 1:
        raise ParameterError("borel_tshift needs j >= 1")
    if j > f_hat.order:
        return f_hat._new(np.zeros_like(f_hat.data))
    e_j = XiSeries.basis(j, f_hat.level, f_hat.order, f_hat.n_space, f_hat.max_degree)
    return conv(f_hat, e_j)


def borel_terms(np_, k):
    """``g_hat_{r,alpha,A}`` at level ``k``, built from ``F`` through :func:`borel_tshift`.

    ``t^p F = t^p F(0, x) + t^p (F - F(0, x))``; the first part is ``F(0, x) e_p``,
    the second the shifted Borel transform of a constant-free series.
    """
    out = []
    zero_key = TermIndex.zero(np_.m, np_.n_space)
    for r in range(np_.m):
        hats = {}
        for key, F in np_.F[r].items():
            if key == zero_key:
                hat = formal_borel(np_.terms[r][key], k) if key in np_.terms[r] else None
            else:
                p = key.degree
                if p > np_.order:
                    continue
                head = XiSeries.basis(p, k, np_.order, np_.n_space, np_.max_degree, coeff=F.coeff(0))
                hat = head + borel_tshift(formal_borel(F.without_constant(), k), p)
            if hat is not None and not hat.is_zero():
                hats[key] = hat
        out.append(hats)
    return out


def _compositions(total, parts):
    """Ordered tuples of ``parts`` positive integers summing to ``total`` (lexicographic)."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def sigma_assignments(keys, L):
    """Index assignments of grade ``L``: ``sum l_s + |alpha| + |A| = L``, each ``l_s >= 1``.

    ``keys`` are the nonzero term indices of one equation; the ``(0, 0)`` term
    is excluded (it only feeds grade 1).  Yields ``(key, ((i, j, l), ...))`` in
    lexicographic order of keys, then of the grade compositions.
    """
    for key in sorted(k for k in keys if k.degree > 0):
        slots = key.slots()
        budget = L - key.degree
        for parts in _compositions(budget, len(slots)):
            yield key, tuple((i, j, l) for (i, j), l in zip(slots, parts))


@dataclass
class EpsGraded:
    """Grades ``v_hat_{r,l}``, ``l = 1..L``, of the Borel-plane solution."""

    level: float
    pieces: list
    theta: float = 0.0

    @property
    def m(self):
        return len(self.pieces)

    @property
    def L(self):
        return len(self.pieces[0]) if self.pieces else 0

    def piece(self, r, ell):
        if not 1 <= ell <= len(self.pieces[r]):
            raise AssertionError(f"grade {ell} of unknown {r} has not been computed")
        return self.pieces[r][ell - 1]

    def total(self, r):
        """The ``eps = 1`` sum of all computed grades."""
        out = self.pieces[r][0]
        for p in self.pieces[r][1:]:
            out = out + p
        return out


def assemble_G(np_, k, ell, lower, ghat=None):
    """``G_{r,ell}`` for every unknown ``r``; ``lower`` must hold all grades below ``ell``."""
    ghat = borel_terms(np_, k) if ghat is None else ghat
    zero = XiSeries.zero(k, np_.order, np_.n_space, np_.max_degree)
    zero_key = TermIndex.zero(np_.m, np_.n_space)
    if ell > 1 and (lower is None or lower.L < ell - 1):
        raise AssertionError(f"grades below {ell} are missing")
    cache = {}

    def factor(i, j, l):
        if (i, j, l) not in cache:
            base = lower.piece(i, l)
            cache[(i, j, l)] = base if j is None else base.diff_x(j)
        return cache[(i, j, l)]

    out = []
    for r in range(np_.m):
        if ell == 1:
            out.append(ghat[r].get(zero_key, zero))
            continue
        total = zero
        for key, assignment in sigma_assignments(ghat[r].keys(), ell):
            total = total + conv_power([ghat[r][key]] + [factor(i, j, l) for i, j, l in assignment])
        out.append(total)
    return out


def convolution_fixpoint(np_, k, theta=0.0, L=None):
    """Grades ``v_hat_{r,l} = euler_inverse(G_{r,l})`` for ``l = 1..L``."""
    L = np_.order if L is None else L
    if L > np_.order:
        raise TruncationError(f"L = {L} exceeds the truncation order {np_.order}", required=L)
    if L < 1:
        raise ParameterError("L must be >= 1")
    ghat = borel_terms(np_, k)
    graded = EpsGraded(float(k), [[] for _ in range(np_.m)], theta)
    for ell in range(1, L + 1):
        G = assemble_G(np_, k, ell, graded, ghat)
        for r in range(np_.m):
            graded.pieces[r].append(euler_inverse(G[r]))
    return graded


@dataclass(frozen=True)
class MultiLevel:
    """Levels ``k_1 < ... < k_p`` with directions ``theta_1..theta_p`` (radians)."""

    ks: tuple
    thetas: tuple

    def __post_init__(self):
        ks = tuple(float(k) for k in self.ks)
        thetas = tuple(float(t) for t in self.thetas)
        if not ks or len(ks) != len(thetas):
            raise ParameterError("need one direction per level")
        if any(not k > 0 for k in ks):
            raise ParameterError("levels must be positive")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ParameterError(f"levels must be strictly increasing, got {list(ks)}")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "thetas", thetas)
        for i in range(len(ks) - 1):
            kappa = self.kappas[i]
            gap = abs(angle_diff(thetas[i], thetas[i + 1]))
            if gap > math.pi / (2 * kappa) + 1e-12:
                raise ParameterError(
                    f"multidirection violated between levels {i + 1} and {i + 2}: "
                    f"|theta_{i + 1} - theta_{i + 2}| = {gap:.6g} > pi/(2 kappa_{i + 1}) = "
                    f"{math.pi / (2 * kappa):.6g} (kappa_{i + 1} = {kappa:.6g})"
                )

    @classmethod
    def single(cls, k=1.0, theta=0.0):
        return cls((k,), (theta,))

    @property
    def p(self):
        return len(self.ks)

    @property
    def kappas(self):
        """``1/kappa_i = 1/k_i - 1/k_{i+1}``, ``kappa_p = k_p``."""
        out = [1.0 / (1.0 / a - 1.0 / b) for a, b in zip(self.ks, self.ks[1:])]
        return tuple(out + [self.ks[-1]])

    def sectors(self, margin=0.5):
        """Summation sectors; level ``i`` gets half-opening ``pi/(2 k_i) + margin``."""
        return [SectorSpec(th, math.pi / (2 * k) + margin) for k, th in zip(self.ks, self.thetas)]


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs of :func:`resum` (the CLI builds these from its config)."""

    order: int = 40
    tol: float = 1e-12
    tail_cut: float = 1e-17
    pade_num: int = None
    pade_den: int = None
    pole_angle: float = 0.05
    residue_floor: float = 1e-10
    workers: int = 1


@dataclass
class SolutionRow:
    t: complex
    x: tuple
    values: tuple
    err_est: float
    stage_flags: str


@dataclass
class SolutionTable:
    rows: list
    m: int
    n_space: int
    evaluate: object = None
    meta: dict = field(default_factory=dict)

    def values(self, r=0):
        return np.array([row.values[r] for row in self.rows])

    def perturbed(self, delta):
        """Copy with every value shifted by ``delta`` (for detector checks)."""
        rows = [
            SolutionRow(row.t, row.x, tuple(v + delta for v in row.values), row.err_est, row.stage_flags)
            for row in self.rows
        ]
        return SolutionTable(rows, self.m, self.n_space, self.evaluate, dict(self.meta))


def _pade_with_fallback(c, level, num, den, flags):
    while True:
        try:
            return pade_from_coefficients(c, num, den, level=level)
        except DegeneracyError:
            if den == 0:
                raise
            num, den = num + 1, den - 1
            if "pade-degree-reduced" not in flags:
                flags.append("pade-degree-reduced")


def _continuation(series, x, settings, theta, flags, check=True, t=None):
    """Pade approximant (and a lower-degree companion) for one Borel series at ``x``.

    With ``t`` given (last level) a pole near the ray is rejected only when its
    kernel-weighted size ``|res| exp(-Re (p/t)^k)`` exceeds ``settings.tol``;
    without ``t`` every significant pole near the ray is rejected.
    """
    c = series.power_coefficients(x)
    half = (series.order - 1) // 2
    num = half if settings.pade_num is None else settings.pade_num
    den = half if settings.pade_den is None else settings.pade_den
    if not np.any(c):
        return None, None
    main = _pade_with_fallback(c, series.level, num, den, flags)
    if check:
        floor = settings.residue_floor * float(np.max(np.abs(c)))
        hits = []
        for pole, res in zip(main.poles, main.residues):
            if pole not in main.poles_near_ray(theta, settings.pole_angle, residue_floor=floor):
                continue
            if t is not None and np.isfinite(res):
                k = series.level
                decay = (abs(pole) / abs(t)) ** k * math.cos(k * angle_diff(np.angle(pole), np.angle(t)))
                if abs(res) * math.exp(-decay) <= settings.tol:
                    continue
            hits.append(complex(pole))
        if hits:
            pole = min(hits, key=abs)
            raise DirectionRejected(
                f"Pade pole at xi = {pole:.6g} lies within {settings.pole_angle} rad of the "
                f"summation ray arg xi = {theta:.6g} (level {series.level:g})",
                pole=pole,
            )
    companion = _pade_with_fallback(c, series.level, max(num - 1, 0), max(den - 1, 0), [])
    return main, companion


def _sum_borel(series, x, t, ml, settings, flags, constant=0j):
    """Sum a level-``k_1`` Borel series through the chain and Laplace at ``k_p``."""
    for s in range(ml.p):
        acc = series if s == 0 else XiSeries(ml.ks[s], series.data, series.n_space, series.max_degree)
        last = s == ml.p - 1
        main, companion = _continuation(acc, x, settings, ml.thetas[s], flags, t=t if last else None)
        if main is None:
            return constant, 0.0
    k, theta = ml.ks[-1], ml.thetas[-1]
    try:
        val, qerr = laplace_eval_regular(main, k, theta, t, settings.tail_cut, settings.tol, with_error=True)
        alt = laplace_eval_regular(companion, k, theta, t, settings.tail_cut, settings.tol)
    except NumericFailure as exc:
        exc.stage = exc.stage or "laplace"
        raise
    return constant + val, qerr + abs(val - alt)


def borel_sum_series(ts, ml, t, x=None, settings=None):
    """Numerical multisum of a TSeries at ``(t, x)``; returns ``(value, err_est)``."""
    settings = settings or SolverSettings()
    x = np.zeros(ts.n_space) if x is None else x
    flags = []
    constant = complex(ts.coeff(0)(x))
    rest = ts.without_constant()
    if rest.is_zero():
        return constant, 0.0
    return _sum_borel(formal_borel(rest, ml.ks[0]), x, t, ml, settings, flags, constant)


def _check_points(ml, t_points):
    k, theta = ml.ks[-1], ml.thetas[-1]
    for t in t_points:
        t = complex(t)
        if t == 0 or abs(angle_diff(np.angle(t), theta)) >= math.pi / (2 * k):
            raise DomainError(
                f"t = {t} is outside the summation sector |arg t - {theta:.4g}| < pi/(2*{k:g})"
            )


def _solution_evaluator(p, ml, settings):
    """Build the formal data once and return ``evaluate(t, x) -> (values, err, flags)``."""
    np_ = normalize(p)
    L = min(settings.order, np_.order)
    graded = convolution_fixpoint(np_, ml.ks[0], ml.thetas[0], L)
    v_hat = [graded.total(r) for r in range(np_.m)]

    def evaluate(t, x):
        t = complex(t)
        x = np.asarray(x, dtype=complex).reshape(-1)
        values, err, flags = [], 0.0, []
        for r in range(np_.m):
            if v_hat[r].is_zero():
                v, e = 0j, 0.0
            else:
                v, e = _sum_borel(v_hat[r], x, t, ml, settings, flags)
            values.append(np_.u0[r](x) + t * (np_.u1[r](x) + v))
            err += abs(t) * e
        return tuple(values), err, flags

    return evaluate, np_, graded


def resum(p, ml, t_points, x_points=None, settings=None):
    """Numerically (multi)sum the formal solution at every ``(t, x)`` pair.

    The Borel series at level ``k_1`` comes from the graded fixed point; it is
    accelerated formally through ``k_2..k_p`` (with a Pade pole check on each
    level's ray) and the level-``k_p`` Pade continuation is Laplace transformed
    along ``theta_p``.  Rows are ordered t-major.
    """
    settings = settings or SolverSettings()
    x_points = [np.zeros(p.n_space)] if x_points is None else [np.asarray(x, dtype=float) for x in x_points]
    t_points = [complex(t) for t in t_points]
    _check_points(ml, t_points)
    evaluate, np_, graded = _solution_evaluator(p, ml, settings)
    pairs = [(t, x) for t in t_points for x in x_points]

    def one(pair):
        t, x = pair
        vals, err, flags = evaluate(t, x)
        return SolutionRow(t, tuple(x.tolist()), vals, err, "|".join(flags) or "ok")

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            rows = list(pool.map(one, pairs))
    else:
        rows = [one(pr) for pr in pairs]
    return SolutionTable(rows, p.m, p.n_space, evaluate, {"levels": ml.ks, "thetas": ml.thetas})


@dataclass
class ResidualReport:
    max_residual: float
    mean_residual: float
    per_row: list


def residual_check(table, p, h, ml=None, settings=None):
    """``max |d_t u - f(t, x, U, grad U)|`` over the table rows.

    ``U`` comes from the table; ``d_t u`` and ``grad_x u`` are central
    differences of re-resummed values (steps ``h |t|`` radially and ``h`` in x).
    The coefficients ``f_{i,alpha,A}(t, x)`` are resummed with the same chain.
    """
    if not table.rows:
        return ResidualReport(0.0, 0.0, [])
    evaluate = table.evaluate
    ml = ml or MultiLevel(tuple(table.meta.get("levels", (1.0,))), tuple(table.meta.get("thetas", (0.0,))))
    settings = settings or SolverSettings()
    if evaluate is None:
        evaluate, _, _ = _solution_evaluator(p, ml, settings)
    res = []
    for row in table.rows:
        t = complex(row.t)
        x = np.asarray(row.x, dtype=float)
        dt = h * t
        if abs(dt) >= abs(t):
            raise DomainError("the t-stencil reaches the origin; use a smaller step")
        plus, _, _ = evaluate(t + dt, x)
        minus, _, _ = evaluate(t - dt, x)
        du = [(a - b) / (2 * dt) for a, b in zip(plus, minus)]
        grad = [[0j] * p.n_space for _ in range(p.m)]
        for j in range(p.n_space):
            e = np.zeros(p.n_space)
            e[j] = h
            xp, _, _ = evaluate(t, x + e)
            xm, _, _ = evaluate(t, x - e)
            for r in range(p.m):
                grad[r][j] = (xp[r] - xm[r]) / (2 * h)
        worst = 0.0
        for i in range(p.m):
            coeffs = {key: borel_sum_series(s, ml, t, x, settings)[0] for key, s in p.terms[i].items()}
            f_val = p.evaluate_rhs(i, coeffs, row.values, grad)
            worst = max(worst, abs(du[i] - f_val))
        res.append(worst)
    return ResidualReport(float(max(res)), float(np.mean(res)), res)
