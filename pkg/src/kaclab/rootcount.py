"""Certified real-root counting.

Two certified routes are provided. ``sturm_count`` works over the integers
after clearing denominators and counts distinct roots exactly.
``bisection_count`` subdivides with enclosures of p and p', first in float64
through the compiled kernel and then in mpmath interval arithmetic with
doubling precision. ``batch_count`` is the Monte Carlo workhorse: it splits
an interval into pieces inside (0, 1) using the negate and reciprocal
transforms and counts whole coefficient matrices at once.
"""
from __future__ import annotations

import math
import re
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from ._backend import count_open_batch, point_signs

DEFAULT_PRECISION = 128
PRECISION_CAP = 4096
STURM_DEGREE_LIMIT = 160
MAX_DEPTH = 100
INF = math.inf


class DegenerateInput(ValueError):
    """Zero polynomial or an interval the routine cannot take."""


class JensenError(ValueError):
    """|f(z)| could not be separated from zero."""


# ---------------------------------------------------------------------------
# data types


def _to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, mpmath.mpf):
        man, exp = c.man_exp
        return Fraction(int(man) * 2 ** exp) if exp >= 0 else Fraction(int(man), 2 ** -exp)
    return Fraction(float(c))


class Polynomial:
    """Coefficients low degree first, exact (Fraction) or floating."""

    __slots__ = ("coefficients", "representation")

    def __init__(self, coefficients: Sequence, representation: str | None = None):
        coeffs = tuple(coefficients)
        if representation is None:
            exact = all(isinstance(c, (int, Fraction)) for c in coeffs)
            representation = "exact" if exact else "floating"
        if representation == "exact":
            coeffs = tuple(_to_fraction(c) for c in coeffs)
        elif representation == "floating":
            coeffs = tuple(c if isinstance(c, mpmath.mpf) else float(c) for c in coeffs)
        else:
            raise ValueError(f"unknown representation {representation!r}")
        self.coefficients = coeffs
        self.representation = representation

    @classmethod
    def from_array(cls, arr) -> "Polynomial":
        return cls([float(c) for c in np.asarray(arr, dtype=float)], "floating")

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient; -1 for the zero polynomial."""
        for i in range(len(self.coefficients) - 1, -1, -1):
            if self.coefficients[i] != 0:
                return i
        return -1

    @property
    def is_zero(self) -> bool:
        return self.degree < 0

    def __len__(self):
        return len(self.coefficients)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coefficients == other.coefficients

    def __repr__(self):
        return f"Polynomial({list(self.coefficients)!r}, {self.representation!r})"

    def exact(self) -> "Polynomial":
        """Exact image; floats are read as the binary rationals they store."""
        if self.representation == "exact":
            return self
        return Polynomial([_to_fraction(c) for c in self.coefficients], "exact")

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coefficients], dtype=float)

    def float_exact(self) -> bool:
        """True when float64 holds every coefficient exactly."""
        for c in self.coefficients:
            f = float(c)
            if not math.isfinite(f) or _to_fraction(f) != _to_fraction(c):
                return False
        return True

    def sign_at(self, x) -> int:
        """Exact sign of p(x) for rational x."""
        x = _to_fraction(x)
        acc = Fraction(0)
        for c in reversed(self.exact().coefficients):
            acc = acc * x + c
        return (acc > 0) - (acc < 0)


@dataclass(frozen=True)
class IntervalSpec:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"bad interval endpoints {self.lo}, {self.hi}")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise ValueError("a degenerate interval must be closed")
        if (math.isinf(self.lo) and self.lo_closed) or (math.isinf(self.hi) and self.hi_closed):
            raise ValueError("infinite endpoints must be open")

    _RX = re.compile(r"^\s*([\(\[])\s*([^,]+?)\s*,\s*([^,]+?)\s*([\)\]])\s*$")

    @classmethod
    def parse(cls, text: str) -> "IntervalSpec":
        """'R', '0', or bracket notation such as '(0,1]', '[1,inf)', '(-inf,-1]'."""
        t = text.strip()
        if t in ("R", "r"):
            return cls(-INF, INF, False, False)
        if t == "0":
            return cls(0.0, 0.0, True, True)
        m = cls._RX.match(t)
        if not m:
            raise ValueError(f"cannot parse interval {text!r}")
        try:
            lo, hi = (_parse_endpoint(s) for s in (m.group(2), m.group(3)))
        except ValueError:
            raise ValueError(f"cannot parse interval endpoints in {text!r}") from None
        return cls(lo, hi, m.group(1) == "[", m.group(4) == "]")

    def __str__(self):
        if self.lo == -INF and self.hi == INF:
            return "R"
        if self.lo == self.hi == 0:
            return "0"
        fmt = lambda v: "inf" if v == INF else "-inf" if v == -INF else repr(v)
        return (("[" if self.lo_closed else "(") + fmt(self.lo) + "," + fmt(self.hi)
                + ("]" if self.hi_closed else ")"))

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True


def _parse_endpoint(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity", "oo"):
        return INF
    if s in ("-inf", "-infinity", "-oo"):
        return -INF
    if "/" in s:
        return float(Fraction(s))
    v = float(s)
    if math.isnan(v):
        raise ValueError(s)
    return v


R_LINE = IntervalSpec(-INF, INF, False, False)
UNIT_HALF_OPEN = IntervalSpec(0.0, 1.0, False, True)
ZERO = IntervalSpec(0.0, 0.0, True, True)


@dataclass(frozen=True)
class CertifiedCount:
    count: int
    method: str  # "sturm-exact" or "bisection-certified"
    certified: bool
    precision_bits_used: int = 0


# ---------------------------------------------------------------------------
# transforms and simple queries


def transform_negate(poly: Polynomial) -> Polynomial:
    """Coefficients of p(-x)."""
    return Polynomial([c if i % 2 == 0 else -c for i, c in enumerate(poly.coefficients)],
                      poly.representation)


def transform_reciprocal(poly: Polynomial) -> Polynomial:
    """Coefficients of x^n p(1/x), n the stored slot length minus one."""
    return Polynomial(poly.coefficients[::-1], poly.representation)


def multiplicity_at_zero(poly: Polynomial, with_flag: bool = False):
    """Index of the first nonzero coefficient.

    The all-zero vector of length n+1 returns n; with_flag=True also returns
    a degenerate flag for that case.
    """
    for i, c in enumerate(poly.coefficients):
        if c != 0:
            return (i, False) if with_flag else i
    tau = max(len(poly.coefficients) - 1, 0)
    return (tau, True) if with_flag else tau


# ---------------------------------------------------------------------------
# Sturm sequences over Z (coefficient lists are high degree first here)


def _int_poly(poly: Polynomial) -> list[int]:
    coeffs = poly.exact().coefficients[: poly.degree + 1]
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return [int(c * den) for c in reversed(coeffs)]


def _primitive(p: list[int]) -> list[int]:
    g = 0
    for c in p:
        g = math.gcd(g, c)
        if g == 1:
            break
    return [c // g for c in p] if g > 1 else p


def _strip(p: list[int]) -> list[int]:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def _deriv(p: list[int]) -> list[int]:
    d = len(p) - 1
    return [c * (d - i) for i, c in enumerate(p[:-1])] or [0]


def _prem(a: list[int], b: list[int]):
    """Pseudo-remainder lc(b)^(da-db+1) a mod b, and the exponent used."""
    lb, r = b[0], list(a)
    steps = len(a) - len(b) + 1
    for _ in range(steps):
        q = r[0]
        r = [lb * x for x in r]
        for i in range(len(b)):
            r[i] -= q * b[i]
        r.pop(0)
    return _strip(r) if r else [0], steps


def _pquo(a: list[int], b: list[int]) -> list[int]:
    """Primitive part of a / b when b divides a over Q."""
    lb, r, q = b[0], list(a), []
    for _ in range(len(a) - len(b) + 1):
        c = r[0]
        q = [lb * x for x in q] + [c]
        r = [lb * x for x in r]
        for i in range(len(b)):
            r[i] -= c * b[i]
        r.pop(0)
    return _primitive(q)


def _gcd(a: list[int], b: list[int]) -> list[int]:
    a, b = _primitive(a), _primitive(b)
    while b != [0] and len(b) > 1:
        r, _ = _prem(a, b)
        a, b = b, _primitive(r) if r != [0] else [0]
    return a if b == [0] else [1]


def _sturm_chain(p: list[int]) -> list[list[int]]:
    chain = [p, _primitive(_deriv(p))]
    while len(chain[-1]) > 1:
        r, steps = _prem(chain[-2], chain[-1])
        if r == [0]:
            break
        sgn = -1 if (chain[-1][0] < 0 and steps % 2 == 1) else 1
        chain.append(_primitive([-sgn * c for c in r]))
    return chain


def _sign_at(p: list[int], x) -> int:
    """Exact sign of p at rational x or at +-inf."""
    if x == INF:
        return (p[0] > 0) - (p[0] < 0)
    if x == -INF:
        s = (p[0] > 0) - (p[0] < 0)
        return s if (len(p) - 1) % 2 == 0 else -s
    x = _to_fraction(x)
    u, v = x.numerator, x.denominator
    h, vp = p[0], 1
    for c in p[1:]:
        vp *= v
        h = h * u + c * vp
    return (h > 0) - (h < 0)


def _variations(chain, x) -> int:
    v, last = 0, 0
    for q in chain:
        s = _sign_at(q, x)
        if s:
            if last and s != last:
                v += 1
            last = s
    return v


class SturmSequence:
    """Sturm chain of the square-free part; reusable across intervals."""

    def __init__(self, poly: Polynomial):
        if poly.is_zero:
            raise DegenerateInput("zero polynomial")
        p = _int_poly(poly)
        self.p = p
        if len(p) == 1:
            self.squarefree, self.chain, self.dropped_degree = p, [p], 0
            return
        g = _gcd(p, _deriv(p))
        sf = p if len(g) == 1 else _pquo(p, g)
        self.squarefree = sf
        self.dropped_degree = len(p) - len(sf)
        self.chain = _sturm_chain(sf) if len(sf) > 1 else [sf]

    def count(self, interval: IntervalSpec) -> int:
        a, b = interval.lo, interval.hi
        pa = _sign_at(self.squarefree, a) if math.isfinite(a) else 1
        if interval.is_point:
            return int(pa == 0)
        pb = _sign_at(self.squarefree, b) if math.isfinite(b) else 1
        # V(a) - V(b) counts distinct roots in (a, b]
        n = _variations(self.chain, a) - _variations(self.chain, b)
        if pb == 0 and not interval.hi_closed:
            n -= 1
        if pa == 0 and interval.lo_closed:
            n += 1
        return n


def sturm_count(poly: Polynomial, interval: IntervalSpec) -> CertifiedCount:
    """Exact number of distinct real roots of poly in the interval."""
    if poly.representation != "exact":
        raise DegenerateInput("sturm_count needs an exact polynomial; use poly.exact()")
    seq = SturmSequence(poly)
    return CertifiedCount(seq.count(interval), "sturm-exact", True, 0)


# ---------------------------------------------------------------------------
# certified bisection


def _endpoint_sign(poly: Polynomial, x) -> int:
    """Exact sign of p(x), trying the certified float evaluation first."""
    if x != 0 and poly.float_exact():
        arr = poly.as_array()
        M = float(np.max(np.abs(arr)))
        if M > 0:
            s = int(point_signs(arr[None, :], np.array([float(x)]), np.array([M]))[0])
            if s != 2:
                return s
    return poly.sign_at(x)


@contextmanager
def _iv_precision(prec: int):
    old = mpmath.iv.prec
    mpmath.iv.prec = prec
    try:
        yield
    finally:
        mpmath.iv.prec = old


def _iv_horner(cs, x):
    r = mpmath.iv.mpf(0)
    for c in reversed(cs):
        r = r * x + c
    return r


def _iv_sign(v) -> int:
    if v.a > 0:
        return 1
    if v.b < 0:
        return -1
    return 2


def _iv_count(poly: Polynomial, lo, hi, s_lo: int, s_hi: int, prec: int,
              max_cells: int = 200000):
    """Bisection in mpmath interval arithmetic; returns (count, ok)."""
    iv = mpmath.iv
    with _iv_precision(prec):
        cs = [iv.mpf(c) if not isinstance(c, Fraction) else iv.mpf(c.numerator) / c.denominator
              for c in poly.coefficients]
        d1 = [c * k for k, c in enumerate(cs)][1:]
        d2 = [c * k for k, c in enumerate(d1)][1:]
        stack = [(mpmath.mpf(lo), mpmath.mpf(hi), s_lo, s_hi, 0)]
        count, cells = 0, 0
        while stack:
            a, b, sa, sb, depth = stack.pop()
            cells += 1
            if cells > max_cells:
                return count, False
            X = iv.mpf([a, b])
            with mpmath.workprec(prec):
                m = (a + b) / 2
            mi = iv.mpf(m)
            pm = _iv_horner(cs, mi)
            enc = pm + _iv_horner(d1, X) * (X - mi)
            if _iv_sign(enc) != 2:
                continue
            if d1:
                denc = _iv_horner(d1, mi) + (_iv_horner(d2, X) * (X - mi) if d2 else 0)
                if _iv_sign(denc) != 2 and sa != 2 and sb != 2:
                    count += sa * sb < 0
                    continue
            if depth >= prec:
                return count, False
            sm = _iv_sign(pm)
            if sm == 2:
                with mpmath.workprec(prec):
                    m = a + (b - a) * 3 / 8
                sm = _iv_sign(_iv_horner(cs, iv.mpf(m)))
                if sm == 2:
                    sm = poly.sign_at(m)
            if not a < m < b:
                return count, False
            if sm == 0:
                count += 1
            stack.append((m, b, sm, sb, depth + 1))
            stack.append((a, m, sa, sm, depth + 1))
    return count, True


def bisection_count(poly: Polynomial, interval: IntervalSpec,
                    precision_bits: int = DEFAULT_PRECISION,
                    precision_cap: int = PRECISION_CAP) -> CertifiedCount:
    """Count distinct roots in a bounded interval by certified subdivision.

    A cell is dropped when the enclosure of p excludes 0 and counted when the
    enclosure of p' excludes 0 and the endpoint signs differ. Float64 is
    tried first; then precision doubles from precision_bits up to the cap.
    certified=False means the cap was hit, typically at a multiple root.
    """
    if poly.is_zero:
        raise DegenerateInput("zero polynomial")
    if not interval.bounded:
        raise DegenerateInput("bisection needs a bounded interval; map tails with "
                              "transform_reciprocal first")
    lo, hi = interval.lo, interval.hi
    s_lo, s_hi = _endpoint_sign(poly, lo), _endpoint_sign(poly, hi)
    extra = int(s_lo == 0 and interval.lo_closed)
    if interval.is_point:
        return CertifiedCount(extra, "bisection-certified", True, 0)
    extra += int(s_hi == 0 and interval.hi_closed)
    if poly.degree == 0:
        return CertifiedCount(extra, "bisection-certified", True, 53)
    if poly.float_exact():
        arr = poly.as_array()
        M = float(np.max(np.abs(arr)))
        k, ok, _ = count_open_batch(arr[None, :], np.array([lo]), np.array([hi]),
                                    np.array([s_lo], np.int8), np.array([s_hi], np.int8),
                                    np.array([M]), MAX_DEPTH)
        if ok[0]:
            return CertifiedCount(int(k[0]) + extra, "bisection-certified", True, 53)
    prec, k = precision_bits, 0
    while prec <= precision_cap:
        k, ok = _iv_count(poly, lo, hi, s_lo, s_hi, prec)
        if ok:
            return CertifiedCount(k + extra, "bisection-certified", True, prec)
        prec *= 2
    return CertifiedCount(k + extra, "bisection-certified", False, precision_cap)


def count_roots(poly: Polynomial, interval: IntervalSpec) -> CertifiedCount:
    """Distinct real roots in any interval, picking Sturm or bisection.

    Exact polynomials of moderate degree go to Sturm. Otherwise unbounded
    pieces are mapped into (0, 1) through the reciprocal (and negate)
    transforms and the rest is bisected.
    """
    if poly.is_zero:
        raise DegenerateInput("zero polynomial")
    if poly.representation == "exact" and poly.degree <= STURM_DEGREE_LIMIT:
        return sturm_count(poly, interval)
    parts = _tail_split(poly, interval)
    total, certified, prec = 0, True, 0
    for sign, p, iv in parts:
        r = bisection_count(p, iv)
        total += sign * r.count
        certified &= r.certified
        prec = max(prec, r.precision_bits_used)
    return CertifiedCount(total, "bisection-certified", certified, prec)


def _trim_high(poly: Polynomial) -> Polynomial:
    return Polynomial(poly.coefficients[: poly.degree + 1], poly.representation)


def _tail_split(poly: Polynomial, I: IntervalSpec):
    """Signed bounded pieces whose weighted counts add up to the count on I."""
    if I.bounded:
        return [(1, poly, I)]
    if I.lo == -INF:
        neg = transform_negate(poly)
        mirrored = IntervalSpec(-I.hi, INF, I.hi_closed, False)
        if I.hi == INF:
            # R: (-inf, 0) + [0, inf)
            left = _tail_split(neg, IntervalSpec(0.0, INF, False, False))
            return left + _tail_split(poly, IntervalSpec(0.0, INF, True, False))
        return _tail_split(neg, mirrored)
    # right tail [lo, inf) or (lo, inf)
    rev = transform_reciprocal(_trim_high(poly))
    tail = (1, rev, IntervalSpec(0.0, 1.0, False, False))  # (1, inf) of poly
    one = IntervalSpec(1.0, 1.0)
    if I.lo < 1 or (I.lo == 1 and I.lo_closed):
        head = IntervalSpec(I.lo, 1.0, I.lo_closed, True)
        return [(1, poly, head), tail]
    if I.lo == 1:
        return [tail]
    # lo > 1: (1, inf) minus (1, lo) or (1, lo]
    gap = IntervalSpec(1.0, I.lo, False, not I.lo_closed)
    return [tail, (-1, poly, gap)]


# ---------------------------------------------------------------------------
# batch counting for Monte Carlo


def normalize_rows(C: np.ndarray):
    """Shift every row so its first nonzero coefficient sits at index 0.

    Returns (shifted, tau, all_zero)."""
    nz = C != 0
    any_nz = nz.any(axis=1)
    tau = np.where(any_nz, nz.argmax(axis=1), C.shape[1] - 1)
    if not np.any(tau[any_nz]):
        return C, tau, ~any_nz
    idx = np.arange(C.shape[1])[None, :] + tau[:, None]
    out = np.take_along_axis(C, np.minimum(idx, C.shape[1] - 1), axis=1)
    out[idx >= C.shape[1]] = 0.0
    return out, tau, ~any_nz


def _signs_at_one(C: np.ndarray) -> np.ndarray:
    """Exact signs of the row sums (p(1)); fsum settles the close calls."""
    s = C.sum(axis=1)
    bound = (C.shape[1] + 2) * 2.0 ** -52 * np.abs(C).sum(axis=1)
    out = np.sign(s).astype(np.int8)
    for i in np.flatnonzero(np.abs(s) <= bound):
        v = math.fsum(C[i])
        out[i] = (v > 0) - (v < 0)
    return out


def _negate_rows(C):
    out = C.copy()
    out[:, 1::2] *= -1.0
    return out


def _reverse_rows(C):
    return normalize_rows(np.ascontiguousarray(C[:, ::-1]))[0]


@dataclass
class BatchCount:
    counts: np.ndarray  # int64 per row
    certified: np.ndarray  # bool per row
    zero_tau: np.ndarray  # multiplicity at 0 (the tau index) per row
    all_zero: np.ndarray  # degenerate all-zero rows
    escalated: int = 0


def _piece_signs(Q, x, M):
    """Certified signs of each row at x in [0, 1]."""
    if x == 0.0:
        return np.sign(Q[:, 0]).astype(np.int8)
    if x == 1.0:
        return _signs_at_one(Q)
    s = np.asarray(point_signs(Q, np.full(len(Q), x), M), dtype=np.int8)
    for i in np.flatnonzero(s == 2):
        s[i] = Polynomial.from_array(Q[i]).sign_at(x)
    return s


def _count_piece(Q, M, a, b, a_closed, b_closed, escalate: bool):
    """Roots of each row in the piece <a, b>; 0 and 1 never count here."""
    P = len(Q)
    counts = np.zeros(P, dtype=np.int64)
    ok = np.ones(P, dtype=bool)
    if a == b:
        if a_closed and b_closed and 0 < a and a != 1:
            counts += _piece_signs(Q, a, M) == 0
        return counts, ok, 0
    sa, sb = _piece_signs(Q, a, M), _piece_signs(Q, b, M)
    k, good, _ = count_open_batch(Q, np.full(P, a), np.full(P, b), sa, sb, M, MAX_DEPTH)
    counts += k
    if a_closed and a not in (0.0, 1.0):
        counts += sa == 0
    if b_closed and b not in (0.0, 1.0):
        counts += sb == 0
    bad = np.flatnonzero(good == 0)
    escalated = len(bad)
    for i in bad:
        ok[i] = False
        if escalate:
            poly = Polynomial.from_array(Q[i])
            iv = IntervalSpec(a, b, a_closed and a not in (0.0, 1.0), b_closed and b not in (0.0, 1.0))
            if poly.degree <= STURM_DEGREE_LIMIT:
                r = sturm_count(poly.exact(), iv)
            else:
                r = bisection_count(poly, iv)
            counts[i], ok[i] = r.count, r.certified
    return counts, ok, escalated


def _half_line(Q, M, lo, hi, lo_closed, hi_closed, escalate):
    """Count roots of rows Q in <lo, hi> with 0 <= lo, 0 excluded."""
    P = len(Q)
    counts = np.zeros(P, dtype=np.int64)
    ok = np.ones(P, dtype=bool)
    esc = 0

    def add(res, w=1):
        nonlocal counts, ok, esc
        counts += w * res[0]
        ok &= res[1]
        esc += res[2]

    if lo < 1:
        b = min(hi, 1.0)
        add(_count_piece(Q, M, lo, b, lo_closed, hi_closed if hi < 1 else False, escalate))
    if lo <= 1 <= hi and (lo < 1 or lo_closed) and (hi > 1 or hi_closed):
        counts += _signs_at_one(Q) == 0
    if hi > 1:
        a = max(lo, 1.0)
        a_closed = lo_closed if lo > 1 else False
        if hi == INF:
            R = _reverse_rows(Q)
            Mr = np.abs(R).max(axis=1)
            add(_count_piece(R, Mr, 0.0, 1.0, False, False, escalate))
            if a > 1:
                add(_count_piece(Q, M, 1.0, a, False, not a_closed, escalate), -1)
        else:
            add(_count_piece(Q, M, a, hi, a_closed, hi_closed, escalate))
    return counts, ok, esc


def batch_count(C: np.ndarray, interval: IntervalSpec, escalate: bool = True) -> BatchCount:
    """Certified counts for each coefficient row of C on the interval.

    Nonzero roots are counted once each (distinct); a root at 0 contributes
    its multiplicity tau. All-zero rows get count 0 and are flagged.
    """
    C = np.ascontiguousarray(C, dtype=float)
    Q, tau, all_zero = normalize_rows(C)
    if np.any(all_zero):
        Q = Q.copy()
        Q[all_zero, 0] = 1.0  # placeholder, result discarded below
    M = np.abs(Q).max(axis=1)
    P = len(Q)
    counts = np.zeros(P, dtype=np.int64)
    ok = np.ones(P, dtype=bool)
    esc = 0
    I = interval
    if I.hi > 0 and not I.is_point:
        lo = max(I.lo, 0.0)
        lo_closed = I.lo_closed if I.lo > 0 else False
        k, good, e = _half_line(Q, M, lo, I.hi, lo_closed, I.hi_closed, escalate)
        counts += k
        ok &= good
        esc += e
    if I.lo < 0 and not I.is_point:
        N = _negate_rows(Q)
        hi = max(-I.lo, 0.0)
        lo = max(-I.hi, 0.0)
        lo_closed = I.hi_closed if I.hi < 0 else False
        k, good, e = _half_line(N, M, lo, hi, lo_closed, I.lo_closed, escalate)
        counts += k
        ok &= good
        esc += e
    if I.contains(0.0):
        counts += tau
    counts[all_zero] = 0
    return BatchCount(counts, ok, np.where(all_zero, 0, tau), all_zero, esc)


# ---------------------------------------------------------------------------
# Jensen bound


def jensen_bound(f, z: complex, r: float, R: float, grid: int = 4096,
                 lipschitz: float | None = None) -> float:
    """Upper bound log(sup_{|w-z|=R}|f(w)| / |f(z)|) / log(R/r) on zeros in B(z, r).

    f is a Polynomial (rigorous enclosures from coefficient bounds) or a
    callable together with a Lipschitz constant for f on the circle. The sup
    is taken over an equispaced boundary grid and padded by L * R * pi / grid.
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    z = complex(z)
    w = z + R * np.exp(2j * np.pi * np.arange(grid) / grid)
    if isinstance(f, Polynomial):
        c = f.as_array()
        absc = np.abs(c)
        rad = abs(z) + R
        k = np.arange(len(c))
        gam = (2 * len(c) + 4) * 2.0 ** -53 * 1.01
        L = float(np.sum(k[1:] * absc[1:] * rad ** (k[1:] - 1))) if len(c) > 1 else 0.0
        err_circle = gam * float(np.sum(absc * rad ** k))
        vals = np.abs(np.polynomial.polynomial.polyval(w, c))
        fz = complex(np.polynomial.polynomial.polyval(z, c))
        err_z = gam * float(np.sum(absc * abs(z) ** k)) + 1e-300
    else:
        if lipschitz is None:
            raise ValueError("a callable f needs a lipschitz bound")
        L = float(lipschitz)
        vals = np.abs(np.array([complex(f(x)) for x in w]))
        fz = complex(f(z))
        err_circle = 1e-12 * float(vals.max())
        err_z = 1e-12 * abs(fz)
    fz_lo = abs(fz) - err_z
    if not fz_lo > 0:
        raise JensenError("|f(z)| enclosure contains 0")
    sup = float(vals.max()) * (1 + 1e-15) + err_circle + L * R * math.pi / grid
    return max(math.log(sup / fz_lo), 0.0) / math.log(R / r)
