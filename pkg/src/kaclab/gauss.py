"""Gaussian Kac polynomials: the Edelman-Kostlan density and its integrals.

With t = exp(-a) and m = n + 1 the density on (0, 1) becomes

    f(t) = sqrt(D(a)) / (2 pi t),   D(a) = 1/sinh(a)^2 - m^2/sinh(m a)^2,

so E N((0, 1)) = (1/2pi) * integral_0^inf sqrt(D(a)) da. Writing
h(y) = 1/sinh(y)^2 - 1/y^2 gives D(a) = h(a) - m^2 h(m a), which has no
cancellation as a -> 0 (t -> 1). The density is even and satisfies
f(1/t) / t^2 = f(t), so every interval reduces to pieces of (0, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from .results import ConstantEstimate, cauchy_gap, log_weight
from .rootcount import IntervalSpec

TWO_PI = 2.0 * math.pi
A_MAX = 45.0  # sqrt(D(a)) < 3e-19 beyond this
MP_SWITCH = 2.0 ** -20
MP_BITS = 256
TARGET_ERROR = 1e-10

# h(y) = sum_k H[k] y^(2k) for small y, from 1/sinh^2 = -d/dy coth; terms shrink
# like (y/pi)^2, so 14 of them reach double precision for y < 0.5
_H_SERIES = tuple(float(-(mpmath.mpf(4) ** k) * mpmath.bernoulli(2 * k) * (2 * k - 1)
                        / mpmath.factorial(2 * k)) for k in range(1, 15))


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    subdivisions: int


def _h(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = y < 0.5
    ys = y[small] ** 2
    acc = np.zeros_like(ys)
    for c in reversed(_H_SERIES):
        acc = acc * ys + c
    out[small] = acc
    yl = y[~small]
    with np.errstate(over="ignore"):
        out[~small] = 1.0 / np.sinh(yl) ** 2 - 1.0 / yl ** 2
    return out


def kac_rice_integrand(a, n: int):
    """sqrt(D(a)) for the variable a = -log|t|; vectorised, stable for all a >= 0."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    m = float(n + 1)
    out = np.empty_like(a)
    near = a < 0.5
    if np.any(near):
        an = a[near]
        out[near] = _h(an) - m * m * _h(m * an)
    far = ~near
    if np.any(far):
        af = a[far]
        with np.errstate(over="ignore"):
            out[far] = 1.0 / np.sinh(af) ** 2 - m * m / np.sinh(m * af) ** 2
    return np.sqrt(np.maximum(out, 0.0))


def _h_mp(y):
    if y < 0.5:
        acc, k, y2 = mpmath.mpf(0), 1, y * y
        tol = mpmath.mpf(2) ** (-mpmath.mp.prec - 8)
        while True:
            term = -(mpmath.mpf(4) ** k) * mpmath.bernoulli(2 * k) * (2 * k - 1) / mpmath.factorial(2 * k) * y2 ** (k - 1)
            acc += term
            if k > 2 and abs(term) < tol:
                return acc
            k += 1
    return 1 / mpmath.sinh(y) ** 2 - 1 / y ** 2


def ek_density_mp(t, n: int, prec: int = MP_BITS):
    """High-precision reference: the stable form evaluated in mpmath."""
    with mpmath.workprec(prec):
        t = abs(mpmath.mpf(t))
        scale = mpmath.mpf(1)
        if t > 1:
            scale = 1 / t ** 2
            t = 1 / t
        m = n + 1
        if t == 0:
            return mpmath.mpf(1) / mpmath.pi
        a = -mpmath.log(t)
        D = _h_mp(a) - m * m * _h_mp(m * a)
        return scale * mpmath.sqrt(max(D, 0)) / (2 * mpmath.pi * t)


def ek_density_direct_mp(t, n: int, prec: int = 2048):
    """The textbook formula, at high enough precision to survive its cancellation."""
    with mpmath.workprec(prec):
        t = mpmath.mpf(t)
        v = 1 / (t ** 2 - 1) ** 2 - (n + 1) ** 2 * t ** (2 * n) / (t ** (2 * n + 2) - 1) ** 2
        return mpmath.sqrt(max(v, 0)) / mpmath.pi


def ek_density(t: float, n: int) -> float:
    """Expected number of real zeros per unit length at t for degree n Gaussian coefficients."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    t = abs(float(t))
    if abs(1.0 - t * t) < MP_SWITCH:
        return float(ek_density_mp(t, n))
    scale = 1.0
    if t > 1.0:
        scale, t = 1.0 / (t * t), 1.0 / t
    if t <= 0.5:
        # no cancellation here, and no overflow in sinh for tiny t
        t2 = t * t
        tail = (n + 1) ** 2 * t2 ** n / (1.0 - t2 ** (n + 1)) ** 2 if t2 > 0 else 0.0
        return scale * math.sqrt(max(1.0 / (1.0 - t2) ** 2 - tail, 0.0)) / math.pi
    a = -math.log(t)
    return scale * float(kac_rice_integrand(a, n)[0]) / (TWO_PI * t)


def _a_range(t1: float, t2: float):
    """a-interval for |t| in [t1, t2] lying on one side of 1."""
    if t2 <= 1.0:
        return (-math.log(t2) if t2 < 1 else 0.0), (A_MAX if t1 == 0 else -math.log(t1))
    return (math.log(t1) if t1 > 1 else 0.0), (A_MAX if math.isinf(t2) else math.log(t2))


def _panels(a1: float, a2: float, n: int):
    """Breakpoints clustered where the integrand turns over, near a ~ 1/n."""
    pts = {a1, a2}
    x = 1.0 / (n + 1)
    while x < a2:
        if x > a1:
            pts.add(x)
        x *= 2.0
    return sorted(p for p in pts if a1 <= p <= a2)


def _integrate_a(a1: float, a2: float, n: int, tol: float):
    if a2 <= a1:
        return 0.0, 0.0, 0
    pts = _panels(min(a1, A_MAX), min(a2, A_MAX), n)
    total = err = 0.0
    subs = 0
    per = tol / max(len(pts) - 1, 1)
    for lo, hi in zip(pts, pts[1:]):
        v, e, info = integrate.quad(lambda a: kac_rice_integrand(a, n)[0], lo, hi,
                                    epsabs=per, epsrel=1e-13, limit=200, full_output=True)[:3]
        total += v
        err += e
        subs += info["last"]
    return total / TWO_PI, err / TWO_PI, subs


def _abs_pieces(interval: IntervalSpec):
    """|t|-ranges (as [t1, t2] on one side of 1) covering the interval, with multiplicity."""
    pieces = []
    for lo, hi in ((max(interval.lo, 0.0), interval.hi),
                   (max(-interval.hi, 0.0), -interval.lo)):
        if hi <= lo:
            continue
        if lo < 1.0:
            pieces.append((lo, min(hi, 1.0)))
        if hi > 1.0:
            pieces.append((max(lo, 1.0), hi))
    return pieces


def expected_roots_gaussian(n: int, interval: IntervalSpec, tol: float = TARGET_ERROR) -> QuadratureResult:
    """E N_{P_n}(I) for standard Gaussian coefficients by adaptive quadrature."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    value = err = 0.0
    subs = 0
    for t1, t2 in _abs_pieces(interval):
        a1, a2 = _a_range(t1, t2)
        v, e, s = _integrate_a(a1, a2, n, tol)
        value += v
        err += e
        subs += s
    return QuadratureResult(value, err, subs)


def bulk_closed_form(C: float) -> float:
    """Large-n limit of E N([0, 1 - 1/C]): (1/2pi) log((2 - 1/C) C)."""
    if not C > 1:
        raise ValueError("cutoff C must exceed 1")
    return math.log((2.0 - 1.0 / C) * C) / TWO_PI


def gaussian_constant(interval: IntervalSpec, n_schedule) -> ConstantEstimate:
    """Centered quadrature values E N - w(I) log n along a degree schedule."""
    ns = list(n_schedule)
    if len(ns) < 3 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_schedule must be strictly increasing with at least 3 entries")
    w = log_weight(interval)
    rows = []
    for n in ns:
        q = expected_roots_gaussian(n, interval)
        rows.append((n, q.value - w * math.log(n), q.error_estimate))
    vals = [v for _, v, _ in rows]
    return ConstantEstimate(vals[-1], rows[-1][2], rows, cauchy_gap(vals), "gaussian-quadrature")


C_GAU_REFERENCE = 0.625738072
