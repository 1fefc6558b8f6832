"""Majorant series and the audits of the graded Borel-plane solution.

``theta(tau) = sum c tau^n / (n+1)^3`` satisfies, for small enough ``c``,

    theta theta << theta,   theta theta' << theta',   theta' theta' << theta'

coefficientwise, and ``Theta(X) = theta(X/R)`` with ``X = x_1 + ... + x_n``
majorizes x-polynomials.  Writing ``Phi_l = Theta^(l) / l!`` these give the
product rules used to bound the grades: the leading Borel coefficient of
``v_hat_{r,l}`` (the one on ``e_l``) is majorized by ``M_{r,l} Phi_l(X)``
where ``M_{r,l}`` follows the recursion over the same index assignments as
the fixed point itself.

The growth factor ``exp(c |xi|^k)`` only affects Borel indices above ``l``;
the audits here compare leading coefficients, where the bound is exact in
the weighted basis.
"""

from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np
from scipy.special import gammaln

from .cauchy_solver import TermIndex, borel_terms, sigma_assignments
from .errors import AuditFailure, ParameterError
from .series_core import XPoly, monomials

__all__ = [
    "MajorantSeries",
    "MSequence",
    "MajorantConstants",
    "WitnessResult",
    "theta_build",
    "majorize",
    "majorize_slack",
    "theta_relations_audit",
    "derivative_ratio_audit",
    "composition_audit",
    "lemma33_audit",
    "fit_constants",
    "m_sequence",
    "implicit_witness",
    "bound_audit",
]

_REL = 1e-12


def _relation_sums(n_max):
    """Convolution sums behind the three product relations, for ``n = 0..n_max``."""
    n = np.arange(n_max + 1)
    t0 = 1.0 / (n + 1.0) ** 3
    t1 = (n + 1.0) / (n + 2.0) ** 3
    return np.convolve(t0, t0)[: n_max + 1], np.convolve(t0, t1)[: n_max + 1], np.convolve(t1, t1)[: n_max + 1], t0, t1


@dataclass(frozen=True)
class MajorantSeries:
    """``Theta(tau) = theta(tau / R)``, ``theta(tau) = sum c tau^n / (n+1)^3``.

    ``order`` is the truncation used to pick ``c`` (the constants are only
    certified up to it).  ``C_ratio`` is the ratio constant with
    ``theta << C_ratio * theta'`` and ``C2`` the product constant.
    """

    c: float
    R: float = 1.0
    order: int = 200
    C2: float = 1.0
    C_ratio: float = 8.0

    def __post_init__(self):
        if not (self.c > 0 and self.R > 0):
            raise ParameterError("c and R must be positive")

    def scaled(self, R):
        return MajorantSeries(self.c, float(R), self.order, self.C2, self.C_ratio)

    def coeffs(self, n_max, deriv=0):
        """Coefficients of ``Theta^(deriv)`` up to ``tau^n_max``."""
        n = np.arange(n_max + 1, dtype=float)
        d = float(deriv)
        log = (
            math.log(self.c)
            + gammaln(n + d + 1.0)
            - gammaln(n + 1.0)
            - (n + d) * math.log(self.R)
            - 3.0 * np.log(n + d + 1.0)
        )
        return np.exp(log)

    def phi(self, n_max, ell):
        """Coefficients of ``Theta^(ell) / ell!``."""
        return self.coeffs(n_max, ell) / math.factorial(ell)

    def induced(self, series_coeffs, n_space, max_degree):
        """Coefficient of each x-monomial in ``sum a_d X^d`` (as an XPoly-shaped array)."""
        mono = monomials(n_space, max_degree)
        out = np.empty(mono.size)
        for i, e in enumerate(mono.exps):
            d = sum(e)
            multinom = math.exp(gammaln(d + 1.0) - sum(gammaln(v + 1.0) for v in e))
            out[i] = series_coeffs[d] * multinom
        return out


def theta_build(N=200, R=1.0):
    """Build ``Theta`` with ``c`` small enough for the three product relations up to order ``N``.

    ``C2`` is the largest ratio (product coefficient)/(c^2 * target coefficient)
    over ``n <= N``; ``c = min(1, 1/C2)`` then makes ``c^2 C2 <= c``.
    """
    if N < 16:
        raise ParameterError("theta_build needs N >= 16")
    s00, s01, s11, t0, t1 = _relation_sums(N)
    C2 = float(max(np.max(s00 / t0), np.max(s01 / t1), np.max(s11 / t1)))
    c = min(1.0, 1.0 / C2)
    C_ratio = float(np.max(t0 / t1))
    mj = MajorantSeries(c, 1.0, N, C2, C_ratio)
    report = theta_relations_audit(mj, N)
    if report["max_slack"] > 1.0 + _REL:
        raise AuditFailure("theta relations fail at the constructed c; this is a bug", witness=report)
    return mj.scaled(R)


def majorize_slack(a, b):
    """Largest ratio ``|a_n| / b_n`` (``inf`` where ``b_n = 0 < |a_n|``).

    ``a`` may be a coefficient array or an :class:`XPoly`; for an XPoly ``b``
    holds coefficients in ``X = x_1 + ... + x_n`` and each monomial is compared
    with the coefficient it receives from ``b(X)``.
    """
    if isinstance(a, XPoly):
        ref = MajorantSeries(1.0).induced(np.asarray(b, dtype=float), a.n_space, a.max_degree)
        vals = np.abs(a.data)
    else:
        vals = np.abs(np.asarray(a, dtype=complex)).reshape(-1)
        ref = np.asarray(b, dtype=float).reshape(-1)
        if ref.size < vals.size:
            raise ParameterError("majorant has fewer coefficients than the series")
        ref = ref[: vals.size]
    if np.any(ref < 0):
        raise ParameterError("majorant coefficients must be nonnegative")
    live = vals > 0
    if not live.any():
        return 0.0
    if np.any(ref[live] == 0):
        return math.inf
    return float(np.max(vals[live] / ref[live]))


def majorize(a, b, rtol=0.0):
    """``a << b`` coefficientwise (``|a_n| <= b_n``)."""
    return majorize_slack(a, b) <= 1.0 + rtol


def _truncmul(a, b):
    return np.convolve(a, b)[: len(a)]


def theta_relations_audit(mj, N=200):
    """Slack of ``theta theta << theta``, ``theta theta' << theta'``, ``theta' theta' << theta'``."""
    base = MajorantSeries(mj.c, 1.0, mj.order)
    th = base.coeffs(N)
    d1 = base.coeffs(N, 1)
    slacks = {
        "theta*theta<<theta": majorize_slack(_truncmul(th, th), th),
        "theta*theta'<<theta'": majorize_slack(_truncmul(th, d1), d1),
        "theta'*theta'<<theta'": majorize_slack(_truncmul(d1, d1), d1),
        "theta<<C*theta'": majorize_slack(th, mj.C_ratio * d1),
    }
    return {"slacks": slacks, "max_slack": max(slacks.values()), "c": mj.c, "C2": mj.C2, "order": N}


def derivative_ratio_audit(mj, ell_max=10, N=100, B=None):
    """``Theta << B^l Theta^(l) / l!`` for ``l <= ell_max``; ``B`` is computed if not given."""
    th = mj.coeffs(N)
    needed = []
    for ell in range(1, ell_max + 1):
        ratio = float(np.max(th / mj.phi(N, ell)))
        needed.append(ratio ** (1.0 / ell))
    B_min = max(needed)
    B = B_min if B is None else B
    slacks = [majorize_slack(th, B**ell * mj.phi(N, ell)) for ell in range(1, ell_max + 1)]
    worst = max(slacks)
    if worst > 1.0 + _REL:
        ell = int(np.argmax(slacks)) + 1
        raise AuditFailure(f"Theta << B^l Theta^(l)/l! fails at l = {ell} (slack {worst:.6g})", witness=ell)
    return {"B": B, "B_min": B_min, "slacks": slacks, "max_slack": worst}


def _compositions0(total, parts):
    """Ordered ``parts``-tuples of nonnegative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions0(total - first, parts - 1):
            yield (first,) + rest


def _prod(series_list):
    out = series_list[0]
    for s in series_list[1:]:
        out = _truncmul(out, s)
    return out


def composition_audit(mj, n_factors, ell_budget, N=50):
    """Brute-force check of the composition inequalities for ``l <= ell_budget``.

    Checks, with ``D^l = Theta^(l)``,
      (a) ``sum l!/prod l_s! prod D^(l_s) << D^l``,
      (b) ``sum l!/prod l_s! prod D^(l_s+1) << R^(1-n) D^(l+1)``,
      (c) ``sum_{l1+l2=l} l!/(l1! l2!) D^(l1) D^(l2+1) << D^(l+1)``,
    and the single-composition forms
      (d) ``prod D^(l_s) / prod l_s! << D^l / l!``,
      (e) ``prod D^(l_s+1) / prod l_s! << R^(1-n) D^(l+1) / l!``.
    Raises :class:`AuditFailure` naming the composition on violation.
    """
    if n_factors < 1 or ell_budget < 0:
        raise ParameterError("need n_factors >= 1 and ell_budget >= 0")
    n = n_factors
    D = {d: mj.coeffs(N, d) for d in range(ell_budget + 2)}
    fact = math.factorial
    worst = {name: 0.0 for name in "abcde"}

    def record(name, slack, comp):
        worst[name] = max(worst[name], slack)
        if slack > 1.0 + _REL:
            raise AuditFailure(f"relation ({name}) fails for composition {comp} (slack {slack:.6g})", witness=comp)

    for ell in range(ell_budget + 1):
        lhs_a = np.zeros(N + 1)
        lhs_b = np.zeros(N + 1)
        for comp in _compositions0(ell, n):
            w = fact(ell) / math.prod(fact(v) for v in comp)
            pa = _prod([D[v] for v in comp])
            pb = _prod([D[v + 1] for v in comp])
            lhs_a += w * pa
            lhs_b += w * pb
            record("d", majorize_slack(pa / math.prod(fact(v) for v in comp), D[ell] / fact(ell)), comp)
            record(
                "e",
                majorize_slack(pb / math.prod(fact(v) for v in comp), mj.R ** (1 - n) * D[ell + 1] / fact(ell)),
                comp,
            )
        record("a", majorize_slack(lhs_a, D[ell]), ("sum", ell))
        record("b", majorize_slack(lhs_b, mj.R ** (1 - n) * D[ell + 1]), ("sum", ell))
        lhs_c = np.zeros(N + 1)
        for l1 in range(ell + 1):
            lhs_c += fact(ell) / (fact(l1) * fact(ell - l1)) * _truncmul(D[l1], D[ell - l1 + 1])
        record("c", majorize_slack(lhs_c, D[ell + 1]), ("pair", ell))
    return {"n_factors": n, "ell_budget": ell_budget, "order": N, "max_slack": worst}


@dataclass
class MajorantConstants:
    """Constants of the grade bounds.

    ``G_prime[r][key] = G C0^(|alpha|+|A|) / R^(|A|-1)`` for the terms of
    equation ``r``; ``M1[r]`` bounds the first grade; ``rho`` holds the raw
    per-term ratios the constants were fitted from.
    """

    G: float
    C0: float
    R: float
    M1: list
    G_prime: list
    rho: dict = field(default_factory=dict)
    safety: float = 1.125


@dataclass
class MSequence:
    M: list
    constants: MajorantConstants
    saturated: bool = False

    def __getitem__(self, idx):
        r, ell = idx
        return self.M[r][ell - 1]

    def scaled(self, factor):
        return MSequence([[factor * v for v in row] for row in self.M], self.constants, self.saturated)


def _leading(series, index):
    return series.coeff(index) if index <= series.order else None


def fit_constants(np_, k, mj, C0=1.0, safety=1.125):
    """Fit ``G`` and ``M_{r,1}`` from the Borel data of a normalized problem.

    For a term of degree ``p = |alpha|+|A| >= 1`` the leading Borel
    coefficient (on ``e_p``) is compared with ``Phi_{p-1}(X)``; ``G`` is the
    largest ratio divided by ``C0^p``, times ``safety``.  The safety factor
    covers the gradient-free terms, where ``Phi_{l-1} << R (1+1/l)^3 Phi_l``
    has to be absorbed into ``(l+1)``; ``(1+1/l)^3/(l+1) <= 1.125`` for ``l >= 2``.
    """
    ghat = borel_terms(np_, k)
    D = np_.max_degree
    rho = {}
    zero_key = TermIndex.zero(np_.m, np_.n_space)
    for r, hats in enumerate(ghat):
        for key, hat in hats.items():
            if key == zero_key:
                continue
            lead = _leading(hat, key.degree)
            ref = mj.induced(mj.phi(D, key.degree - 1), np_.n_space, D)
            rho[(r, key)] = float(np.max(np.abs(lead.data) / ref))
    G = safety * max((v / C0 ** key.degree for (r, key), v in rho.items()), default=0.0)
    M1 = []
    for r, hats in enumerate(ghat):
        if zero_key in hats:
            lead = hats[zero_key].coeff(1).data / 2.0
            ref = mj.induced(mj.phi(D, 1), np_.n_space, D)
            M1.append(float(np.max(np.abs(lead) / ref)))
        else:
            M1.append(0.0)
    G_prime = [
        {key: G * C0**key.degree / mj.R ** (key.abs_A - 1) for key in hats if key != zero_key} for hats in ghat
    ]
    return MajorantConstants(G, C0, mj.R, M1, G_prime, rho, safety)


def m_sequence(constants, L):
    """``M_{r,l}`` for ``l <= L`` over the same assignments the fixed point uses."""
    if L < 1:
        raise ParameterError("L must be >= 1")
    m = len(constants.M1)
    M = [[float(v)] for v in constants.M1]
    saturated = False
    with np.errstate(over="ignore"):
        for ell in range(2, L + 1):
            new = []
            for r in range(m):
                total = 0.0
                Gp = constants.G_prime[r]
                for key, assignment in sigma_assignments(Gp.keys(), ell):
                    term = Gp[key]
                    for i, _j, l in assignment:
                        term *= M[i][l - 1]
                    total += term
                if not math.isfinite(total):
                    saturated = True
                new.append(total)
            for r in range(m):
                M[r].append(new[r])
    return MSequence(M, constants, saturated)


@dataclass
class WitnessResult:
    C: list
    equal: bool
    max_rel_diff: float
    radius: float


def implicit_witness(G_prime, M1, L, ms=None, rtol=1e-9):
    """Solve ``y_r = M_{r,1} z + sum G'_{r,key} z^p prod y_slots`` order by order in ``z``.

    Returns the coefficients ``C_{r,l}`` (``l = 1..L``), whether they equal
    ``ms`` (when given) to ``rtol``, and a root-test radius estimate.
    """
    m = len(M1)
    Y = np.zeros((m, L + 1))
    for _ in range(L):
        new = np.zeros_like(Y)
        for r in range(m):
            new[r, 1] += M1[r]
            for key, gp in G_prime[r].items():
                p = key.degree
                if p > L:
                    continue
                term = np.zeros(L + 1)
                term[p] = gp
                for i, _j in key.slots():
                    term = np.convolve(term, Y[i])[: L + 1]
                new[r] += term
        Y = new
    C = [list(Y[r, 1:]) for r in range(m)]
    diff = 0.0
    equal = True
    if ms is not None:
        for r in range(m):
            for ell in range(1, L + 1):
                a, b = C[r][ell - 1], ms.M[r][ell - 1]
                d = abs(a - b) / max(abs(a), abs(b), 1e-300)
                diff = max(diff, d if (a or b) else 0.0)
        equal = diff <= rtol
    top = [Y[r, L] ** (1.0 / L) for r in range(m) if Y[r, L] > 0]
    radius = 1.0 / max(top) if top else math.inf
    return WitnessResult(C, equal, diff, radius)


def bound_audit(grading, ms, mj, level=None, L=None, raise_on_fail=True):
    """Check ``lead(v_hat_{r,l}) << M_{r,l} Theta^(l)(X) / l!`` for every ``r``, ``l``.

    ``lead`` is the coefficient of ``v_hat_{r,l}`` on ``e_l``.  Returns a
    report with the worst slack; raises :class:`AuditFailure` with an
    ``(r, l, monomial)`` witness on violation unless ``raise_on_fail`` is off.
    """
    if level is not None and float(level) != grading.level:
        raise ParameterError("grading level does not match")
    L = grading.L if L is None else min(L, grading.L)
    worst, where = 0.0, None
    failures = []
    for r in range(grading.m):
        for ell in range(1, L + 1):
            piece = grading.piece(r, ell)
            lead = piece.coeff(ell)
            D = piece.max_degree
            ref = ms[r, ell] * mj.induced(mj.phi(D, ell), piece.n_space, D)
            vals = np.abs(lead.data)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(vals > 0, vals / np.where(ref > 0, ref, 0.0), 0.0)
            ratio = np.nan_to_num(ratio, nan=0.0, posinf=math.inf)
            i = int(np.argmax(ratio))
            if ratio[i] > worst:
                worst, where = float(ratio[i]), (r, ell, piece.mono.exps[i])
            if ratio[i] > 1.0 + 1e-9:
                failures.append((r, ell, piece.mono.exps[i], float(ratio[i])))
    report = {"max_slack": worst, "worst_at": where, "failures": failures, "L": L}
    if failures and raise_on_fail:
        r, ell, e, s = failures[0]
        raise AuditFailure(
            f"grade bound violated for unknown {r}, grade {ell}, monomial {e} (ratio {s:.6g})",
            witness=(r, ell, e),
        )
    return report


# name used by the published interface
lemma33_audit = composition_audit
