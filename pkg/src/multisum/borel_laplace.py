"""Numerical k-Laplace and k-Borel transforms, Pade continuation, acceleration.

Conventions
-----------
* ``laplace_eval`` integrates along the ray ``arg xi = theta``.  With
  ``xi = |t| y e^{i theta}`` the kernel becomes ``exp(-y^k w)`` where
  ``w = exp(i k (theta - arg t))``; it decays iff ``|theta - arg t| < pi/(2k)``.
* ``borel_contour_eval`` uses the three-leg contour: out along
  ``arg t = theta + delta'``, the arc ``|t| = r0`` clockwise, back along
  ``arg t = theta - delta'``.  Powers of ``t`` are taken with the argument
  of the leg, not the principal one.
* Pade approximants act on the regular part ``h(xi) = xi^(k-1) g(xi)`` of a
  level-k Borel series, since ``g`` itself carries ``xi^(1-k)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg
from scipy.optimize import curve_fit

from ._quad import adaptive_gl, call_vectorized
from .errors import DegeneracyError, DomainError, NumericFailure, ParameterError

__all__ = [
    "SectorSpec",
    "ContourSpec",
    "RationalApprox",
    "laplace_eval",
    "laplace_eval_regular",
    "borel_contour_eval",
    "pade_continue",
    "pade_from_coefficients",
    "accelerate_numeric",
    "fit_growth_order",
    "pade_extended",
    "angle_diff",
]


def angle_diff(a, b):
    """``a - b`` wrapped into ``(-pi, pi]``."""
    d = math.remainder(a - b, 2 * math.pi)
    return math.pi if d == -math.pi else d


@dataclass(frozen=True)
class SectorSpec:
    theta: float
    half_opening: float
    r_max: float = math.inf

    def __post_init__(self):
        if not self.half_opening > 0:
            raise ParameterError("half_opening must be positive")
        if not self.r_max > 0:
            raise ParameterError("r_max must be positive")

    def admits_summation(self, k):
        """Summation at level k needs an opening wider than pi/k."""
        return self.half_opening > math.pi / (2 * k)

    def contains(self, t):
        t = complex(t)
        return t != 0 and abs(t) < self.r_max and abs(angle_diff(np.angle(t), self.theta)) < self.half_opening


@dataclass(frozen=True)
class ContourSpec:
    theta: float
    delta_prime: float
    r0: float

    def __post_init__(self):
        if not self.delta_prime > 0 or not self.r0 > 0:
            raise ParameterError("delta_prime and r0 must be positive")

    @classmethod
    def default(cls, k, theta=0.0, delta=None, r0=1.0):
        """``delta' = pi/(2k) + 0.6 (delta - pi/(2k))``; ``delta`` defaults to ``pi/(2k) + 0.5``."""
        base = math.pi / (2 * k)
        delta = base + 0.5 if delta is None else delta
        if not delta > base:
            raise ParameterError(f"sector half-opening {delta} must exceed pi/(2k) = {base}")
        return cls(theta, base + 0.6 * (delta - base), r0)

    def validate(self, k):
        if not self.delta_prime > math.pi / (2 * k):
            raise ParameterError(f"delta' = {self.delta_prime} must exceed pi/(2k) = {math.pi / (2 * k)}")


def _xi_power(r, phase, p):
    """``(r e^{i phase})^p`` with the given phase (no principal-branch wrap)."""
    return np.exp(p * (np.log(r) + 1j * phase))


def _laplace_core(h, k, theta, t, tail_cut, tol):
    """Laplace integral written through the regular part ``h = xi^(k-1) f``."""
    if not k > 0:
        raise ParameterError("level must be positive")
    t = complex(t)
    if t == 0:
        raise DomainError("t = 0 is not in the open sector")
    d = angle_diff(theta, np.angle(t))
    if abs(d) >= math.pi / (2 * k):
        raise DomainError(
            f"kernel does not decay: |theta - arg t| = {abs(d):.4g} >= pi/(2k) = {math.pi / (2 * k):.4g}"
        )
    w = np.exp(1j * k * d)
    s_max = -math.log(tail_cut) / w.real
    y_max = s_max ** (1.0 / k)
    ray = np.exp(1j * theta)
    scale = abs(t)

    def integrand(y):
        y = np.asarray(y, dtype=float)
        xi = scale * y * ray
        return k * call_vectorized(h, xi) * np.exp(-(y**k) * w)

    # split at the kernel's e-folding point so the panel layout follows the decay
    knots = [0.0, min(1.0, y_max), y_max] if y_max > 1.0 else [0.0, y_max]
    total, err = 0j, 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        v, e = adaptive_gl(integrand, lo, hi, reltol=tol, abstol=tol * 1e-300)
        total += v
        err += e
    # a large power of xi can push the mass past the kernel cut; extend until negligible
    hi = y_max
    for _ in range(64):
        if abs(integrand(np.array([hi]))[0]) * hi <= tol * abs(total):
            break
        v, e = adaptive_gl(integrand, hi, 2.0 * hi, reltol=tol, abstol=tol * 1e-300)
        total += v
        err += e
        hi *= 2.0
    else:
        raise NumericFailure("Laplace integrand does not decay along the ray", stage="laplace")
    return total * scale * ray, err * scale


def laplace_eval(f, k, theta, t, tail_cut=1e-17, tol=1e-13, with_error=False):
    """``int_0^{infty e^{i theta}} exp(-(xi/t)^k) f(xi) d xi^k``.

    ``f`` is evaluated on the ray (vectorized callables are used as such).
    The integral is cut where the kernel falls below ``tail_cut``.
    """
    def h(xi):
        xi = np.asarray(xi, dtype=complex)
        return _xi_power(np.abs(xi), theta, k - 1.0) * call_vectorized(f, xi)

    val, err = _laplace_core(h, k, theta, t, tail_cut, tol)
    return (val, err) if with_error else val


def laplace_eval_regular(h, k, theta, t, tail_cut=1e-17, tol=1e-13, with_error=False):
    """Same as :func:`laplace_eval` for ``f = xi^(1-k) h`` given through ``h``."""
    val, err = _laplace_core(h, k, theta, t, tail_cut, tol)
    return (val, err) if with_error else val


def borel_contour_eval(psi, k, contour, xi, tol=1e-10, with_error=False):
    """``(1/2 pi i) int_C exp((xi/t)^k) psi(t) d t^(-k)`` on the three-leg contour."""
    contour.validate(k)
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xi = 0 is not in the open sector")
    theta, dp, r0 = contour.theta, contour.delta_prime, contour.r0
    arg_xi = theta + angle_diff(np.angle(xi), theta)
    room = dp - math.pi / (2 * k)
    if abs(arg_xi - theta) >= room:
        raise DomainError(
            f"arg xi is {abs(arg_xi - theta):.4g} from theta; the contour only covers {room:.4g}"
        )
    log_xi = math.log(abs(xi)) + 1j * arg_xi

    def kernel(rho, phase):
        # exp((xi/t)^k) * (-k) t^(-k-1), assembled in log form
        log_t = np.log(rho) + 1j * phase
        expo = np.exp(k * (log_xi - log_t)) - (k + 1.0) * log_t
        return -k * np.exp(expo)

    def leg(phase):
        direction = np.exp(1j * phase)

        def g(rho):
            rho = np.asarray(rho, dtype=float)
            out = np.zeros(rho.shape, dtype=complex)
            # the kernel underflows to exactly 0 near rho = 0; skip psi there
            kern = kernel(np.maximum(rho, 1e-300), phase)
            live = kern != 0
            if live.any():
                out[live] = kern[live] * call_vectorized(psi, rho[live] * direction) * direction
            return out

        return adaptive_gl(g, 0.0, r0, reltol=tol, abstol=tol * 1e-300)

    def arc(phi):
        phi = np.asarray(phi, dtype=float)
        t = r0 * np.exp(1j * phi)
        return kernel(np.full(phi.shape, r0), phi) * call_vectorized(psi, t) * 1j * t

    out_v, out_e = leg(theta + dp)
    arc_v, arc_e = adaptive_gl(arc, theta + dp, theta - dp, reltol=tol, abstol=tol * 1e-300)
    in_v, in_e = leg(theta - dp)
    total = out_v + arc_v - in_v
    err = out_e + arc_e + in_e
    val = total / (2j * math.pi)
    err = err / (2 * math.pi)
    return (val, err) if with_error else val


@dataclass
class RationalApprox:
    """``[L/M]`` rational approximant of the regular part ``h`` of a Borel series.

    ``numerator``/``denominator`` are coefficient lists in the scaled variable
    ``z = xi / scale``.  ``poles`` are in the ``xi`` plane; ``residues`` are the
    residues of ``h`` there (tiny ones flag Froissart doublets).
    """

    numerator: np.ndarray
    denominator: np.ndarray
    scale: float = 1.0
    level: float = 1.0
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    residues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        self.numerator = np.asarray(self.numerator, dtype=complex)
        self.denominator = np.asarray(self.denominator, dtype=complex)
        if self.denominator[0] == 0:
            raise DegeneracyError("Pade denominator vanishes at the origin")
        z = np.roots(self.denominator[::-1]) if self.denominator.size > 1 else np.zeros(0, dtype=complex)
        self.poles = z * self.scale
        if z.size:
            dq = np.polynomial.polynomial.polyder(self.denominator)
            p_at = np.polynomial.polynomial.polyval(z, self.numerator)
            q_at = np.polynomial.polynomial.polyval(z, dq)
            with np.errstate(divide="ignore", invalid="ignore"):
                self.residues = self.scale * p_at / q_at
        else:
            self.residues = np.zeros(0, dtype=complex)

    @property
    def num_deg(self):
        return self.numerator.size - 1

    @property
    def den_deg(self):
        return self.denominator.size - 1

    def __call__(self, xi):
        """Value of the regular part ``h(xi)``."""
        z = np.asarray(xi, dtype=complex) / self.scale
        return np.polynomial.polynomial.polyval(z, self.numerator) / np.polynomial.polynomial.polyval(
            z, self.denominator
        )

    def borel_value(self, xi):
        """Value of the Borel function ``xi^(1-k) h(xi)``."""
        xi = np.asarray(xi, dtype=complex)
        return xi ** (1.0 - self.level) * self(xi)

    def coefficients_xi(self):
        """(numerator, denominator) as coefficient lists in ``xi``."""
        p = self.numerator / self.scale ** np.arange(self.numerator.size)
        q = self.denominator / self.scale ** np.arange(self.denominator.size)
        return p, q

    def poles_near_ray(self, theta, max_angle=0.05, r_max=math.inf, residue_floor=0.0):
        """Poles within ``max_angle`` of the ray, up to modulus ``r_max``."""
        hits = []
        for p, res in zip(self.poles, self.residues):
            if not np.isfinite(p) or abs(p) > r_max:
                continue
            if abs(p) == 0 or abs(angle_diff(np.angle(p), theta)) < max_angle:
                if not np.isfinite(res) or abs(res) > residue_floor:
                    hits.append(complex(p))
        return hits


def _coefficient_scale(c):
    nz = np.flatnonzero(np.abs(c) > 0)
    if nz.size < 2:
        return 1.0
    slope = np.polyfit(nz, np.log(np.abs(c[nz])), 1)[0]
    return float(np.exp(-slope)) if np.isfinite(slope) else 1.0


def _pade_classic(cs, num_deg, den_deg, cond_limit):
    get = lambda i: cs[i] if i >= 0 else 0.0
    mat = np.array([[get(num_deg + j - i) for i in range(1, den_deg + 1)] for j in range(1, den_deg + 1)])
    rhs = -np.array([get(num_deg + j) for j in range(1, den_deg + 1)])
    colmax = np.max(np.abs(mat), axis=0)
    if not np.all(colmax > 0):
        raise DegeneracyError(
            f"singular Pade system for [{num_deg}/{den_deg}]; try a lower denominator degree"
        )
    cond = np.linalg.cond(mat / colmax)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DegeneracyError(
            f"ill-conditioned Pade system for [{num_deg}/{den_deg}] (cond {cond:.3g}); "
            "try lower degrees"
        )
    q = np.concatenate([[1.0], scipy.linalg.solve(mat, rhs)])
    p = np.array([sum(q[i] * get(j - i) for i in range(0, min(j, den_deg) + 1)) for j in range(num_deg + 1)])
    return p, q


def _pade_robust(cs, num_deg, den_deg, tol):
    """SVD-based Pade that lowers the degrees until the defect is gone.

    Follows Gonnet, Guttel and Trefethen (2013): the denominator is a null
    vector of the Toeplitz block, and the degrees drop by the numerical rank
    deficiency, which removes spurious pole-zero pairs.
    """
    m, n = num_deg, den_deg
    scale = tol * np.linalg.norm(cs)
    if not np.any(np.abs(cs) > scale):
        return np.zeros(1, dtype=complex), np.ones(1, dtype=complex)
    row = np.concatenate([[cs[0]], np.zeros(n, dtype=complex)])
    while True:
        if n == 0:
            return np.array(cs[: m + 1]), np.ones(1, dtype=complex)
        Z = scipy.linalg.toeplitz(cs[: m + n + 1], row[: n + 1])
        C = Z[m + 1 : m + n + 1, :]
        rank = int(np.sum(np.linalg.svd(C, compute_uv=False) > scale))
        if rank == n:
            break
        m -= n - rank
        n = rank
        row = row[: n + 1]
        if m < 0:
            return np.zeros(1, dtype=complex), np.ones(1, dtype=complex)
    _, _, vh = np.linalg.svd(C)
    b = vh[-1].conj()
    # reweighting step: makes the null vector better conditioned
    D = np.diag(np.abs(b) + math.sqrt(np.finfo(float).eps))
    Q, _ = np.linalg.qr((C @ D).conj().T, mode="complete")
    b = D @ Q[:, n]
    b = b / np.linalg.norm(b)
    a = Z[: m + 1, :] @ b
    lead = int(np.argmax(np.abs(b) > tol))
    b, a = b[lead:], a[lead:]
    if lead:
        a = a[: max(a.size, 1)]
    while b.size > 1 and abs(b[-1]) <= tol:
        b = b[:-1]
    while a.size > 1 and abs(a[-1]) <= scale:
        a = a[:-1]
    return a / b[0], b / b[0]


def pade_from_coefficients(c, num_deg, den_deg, level=1.0, robust=True, tol=1e-14, cond_limit=1e14):
    """``[num_deg/den_deg]`` Pade approximant of ``sum_j c_j z^j``.

    With ``robust=True`` the degrees are lowered where the data do not support
    them (the returned degrees can be smaller than requested).  With
    ``robust=False`` the classical linear system is solved and a singular or
    ill-conditioned system raises :class:`DegeneracyError`.
    """
    c = np.asarray(c, dtype=complex)
    if num_deg < 0 or den_deg < 0:
        raise ParameterError("Pade degrees must be nonnegative")
    if c.size < num_deg + den_deg + 1:
        raise ParameterError(
            f"[{num_deg}/{den_deg}] needs {num_deg + den_deg + 1} coefficients, have {c.size}"
        )
    scale = _coefficient_scale(c[: num_deg + den_deg + 1])
    cs = c[: num_deg + den_deg + 1] * scale ** np.arange(num_deg + den_deg + 1)
    if den_deg == 0:
        return RationalApprox(cs[: num_deg + 1], np.array([1.0]), scale, level)
    if robust:
        p, q = _pade_robust(cs, num_deg, den_deg, tol)
    else:
        p, q = _pade_classic(cs, num_deg, den_deg, cond_limit)
    return RationalApprox(p, q, scale, level)


def pade_continue(g, x_point=None, num_deg=None, den_deg=None, robust=False):
    """Pade continuation of a level-k XiSeries at the point ``x_point``.

    Works on the regular part ``h(xi) = xi^(k-1) g(xi) = sum_j b_{j+1} xi^j / Gamma((j+1)/k)``.
    Degrees default to ``floor((N-1)/2)`` each.
    """
    c = g.power_coefficients(x_point)
    half = (g.order - 1) // 2
    num_deg = half if num_deg is None else num_deg
    den_deg = half if den_deg is None else den_deg
    return pade_from_coefficients(c, num_deg, den_deg, level=g.level, robust=robust)


def accelerate_numeric(f_prev, k_prev, k_next, theta_prev, contour, xi, tail_cut=1e-17, tol=1e-10):
    """``(B_{k_next} L_{k_prev} f_prev)(xi)`` by composing the two quadratures."""
    if not k_next > k_prev:
        raise ParameterError("acceleration must raise the level")

    def psi(t):
        t = np.asarray(t, dtype=complex)
        out = np.empty(t.shape, dtype=complex)
        for idx, tv in np.ndenumerate(t):
            try:
                out[idx] = laplace_eval(f_prev, k_prev, theta_prev, tv, tail_cut=tail_cut, tol=tol * 1e-2)
            except NumericFailure as exc:
                exc.stage = "laplace"
                raise
            except DomainError as exc:
                raise DomainError(f"[laplace stage] {exc}") from exc
        return out

    try:
        return borel_contour_eval(psi, k_next, contour, xi, tol=tol)
    except NumericFailure as exc:
        if exc.stage is None:
            exc.stage = "borel"
        raise
    except DomainError as exc:
        if str(exc).startswith("[laplace stage]"):
            raise
        raise DomainError(f"[borel stage] {exc}") from exc


def fit_growth_order(func, theta, radii, flat_tol=1e-2):
    """Fit ``log|func(r e^{i theta})| ~ a + b log r + c r^kappa``; return ``(kappa, c)``.

    The ``b log r`` term absorbs algebraic prefactors.  Returns ``(0.0, 0.0)``
    when an algebraic model ``a + b log r + d/r + e/r^2`` already fits to
    ``flat_tol`` (no exponential growth along the ray) or the modulus decays.
    """
    radii = np.asarray(radii, dtype=float)
    vals = np.abs(call_vectorized(func, radii * np.exp(1j * theta)))
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        raise NumericFailure("cannot fit growth order through zero or non-finite samples")
    logs = np.log(vals)
    lr = np.log(radii)
    flat = np.column_stack([np.ones_like(lr), lr, 1.0 / radii, radii**-2.0])
    coef, *_ = np.linalg.lstsq(flat, logs, rcond=None)
    if np.sqrt(np.mean((flat @ coef - logs) ** 2)) <= flat_tol or logs[-1] <= logs[0]:
        return 0.0, 0.0

    def model(r, a, b, c, kappa):
        return a + b * np.log(r) + c * r**kappa

    p0 = (logs[0], 0.0, max((logs[-1] - logs[0]) / radii[-1], 1e-3), 1.0)
    try:
        popt, _ = curve_fit(
            model, radii, logs, p0=p0, bounds=([-np.inf, -np.inf, 0.0, 0.05], [np.inf, np.inf, np.inf, 20.0]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise NumericFailure(f"growth-order fit failed: {exc}") from exc
    return float(popt[3]), float(popt[2])


def pade_extended(coeffs, num_deg, den_deg, dps=100):
    """``[num_deg/den_deg]`` Pade approximant in mpmath arithmetic.

    For coefficient streams whose structure sits below double precision
    (e.g. a fast-growing part hiding a slower one).  ``coeffs`` may be
    mpmath numbers or anything ``mpmath.mpmathify`` accepts; returns a
    callable taking complex arrays and returning complex128 values.
    """
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = dps
    c = [ctx.mpmathify(v) for v in coeffs]
    if len(c) < num_deg + den_deg + 1:
        raise ParameterError(f"[{num_deg}/{den_deg}] needs {num_deg + den_deg + 1} coefficients")
    try:
        p, q = ctx.pade(c[: num_deg + den_deg + 1], num_deg, den_deg)
    except ZeroDivisionError as exc:
        raise DegeneracyError(f"singular Pade system for [{num_deg}/{den_deg}]") from exc
    p_rev, q_rev = p[::-1], q[::-1]

    def evaluate(z):
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape, dtype=complex)
        for idx, zv in np.ndenumerate(z):
            w = ctx.mpc(zv.real, zv.imag)
            out[idx] = complex(ctx.polyval(p_rev, w) / ctx.polyval(q_rev, w))
        return out

    return evaluate
