"""Pure-numpy version of the compiled counting kernel.

Same algorithm and the same certificates as ``_kcount.h``; the Taylor data
at up to 16 midpoints comes from a power-matrix product instead of a fused
Horner sweep. The error radii use gamma_(4T+16), which also covers the
cumulative-product powers and the dot-product summation used here.
"""
import math

import numpy as np

ORDER = 4
WIDTH = 16
UNIT = 2.0 ** -53
SAFE_LO = 1.0 - 1e-13
SAFE_HI = 1.0 + 1e-13
TINY = 1e-300
FILL_SPLIT = 0.49951171875
LOG_TAIL = math.log(1e-22)


def _gamma(k):
    ku = k * UNIT
    return ku / (1.0 - ku)


def _binom(n, k):
    r = 1.0
    for i in range(k):
        r = r * (n - i) / (i + 1)
    return r


def _abs_series(X, top, j):
    if top < j:
        return 0.0
    full = math.inf
    if X < 1.0:
        full = (1.0 - X) ** -(j + 1)
    partial = _binom(top + 1.0, j + 1)
    if X > 1.0:
        try:
            partial *= X ** (top - j)
        except OverflowError:
            partial = math.inf
    return min(full, partial) * SAFE_HI


def _truncation(X, M, n):
    if X >= 1.0 or n < 64:
        return n
    if X <= 0.0:
        return min(n, ORDER)
    lx, t = math.log(X), 16.0
    for _ in range(4):
        t = (LOG_TAIL - math.log(max(M, 1.0)) - ORDER * math.log(t + 2.0)) / lx + ORDER
    if t + 1.0 >= n:
        return n
    return int(math.ceil(t)) + 1


def _bounds(n, T, X, M, t):
    g = _gamma(4 * T + 16)
    e = []
    for j in range(ORDER):
        ej = g * M * _abs_series(X, T, j) + TINY * (T + 2)
        if T < n:
            rho = X * (T + 2.0) / (T + 2.0 - j)
            if rho >= 1.0:
                return None
            ej += M * _binom(T + 1.0, j) * X ** (T + 1 - j) / (1.0 - rho) * SAFE_HI
        if not (math.isfinite(t[j]) and math.isfinite(ej)):
            return None
        e.append(ej)
    rem = M * _abs_series(X, n, ORDER)
    if not math.isfinite(rem):
        return None
    return e, rem


def _taylor(c, T, m):
    """Taylor coefficients t[j, l] of p at points m[l], using c[0..T]."""
    m = np.asarray(m, dtype=float)
    k = np.arange(T + 1)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        pw = np.ones((len(m), T + 1))
        if T > 0:
            pw[:, 1:] = np.cumprod(np.broadcast_to(m[:, None], (len(m), T)), axis=1)
        out = np.empty((ORDER, len(m)))
        for j in range(ORDER):
            if j > T:
                out[j] = 0.0
                continue
            d = c[j:T + 1] * _binom_vec(k[j:], j)
            out[j] = pw[:, :T + 1 - j] @ d
    return out


def _binom_vec(k, j):
    r = np.ones(len(k))
    for i in range(j):
        r = r * (k - i) / (i + 1)
    return r


def _sign(v, err):
    if v * SAFE_LO > err:
        return 1
    if -v * SAFE_LO > err:
        return -1
    return 2


def _point_sign(c, n, x, M):
    X = abs(x)
    T = _truncation(X, M, n)
    t = _taylor(c, T, [x])[:, 0]
    b = _bounds(n, T, X, M, t)
    if b is None:
        return 2
    return _sign(t[0], b[0][0])


def _shift_sign(t, e, rem, off, h):
    val, rad, p, hp = 0.0, rem * h ** ORDER, 1.0, 1.0
    for j in range(ORDER):
        val += t[j] * p
        rad += e[j] * hp
        p *= off
        hp *= h
    rad += 8.0 * UNIT * (abs(val) + rad)
    return _sign(val, rad * SAFE_HI + TINY)


def _scale(x, n):
    return max(abs(1.0 - abs(x)), 1.0 / (n + 1))


def _count_open(c, n, lo, hi, slo, shi, M, max_depth):
    if n < 0 or not lo < hi:
        return 0, 1, 0
    pend = [(lo, hi, slo, shi, 0)]
    count = cells = 0
    while pend:
        while len(pend) < WIDTH:
            best, bq = -1, 0.0
            for i, (a, b, _, _, d) in enumerate(pend):
                q = 0.5 * (b - a) / _scale(0.5 * (a + b), n)
                if d < max_depth - 1 and q > bq and q > 1e-3:
                    best, bq = i, q
            if best < 0:
                break
            a, b, sa, sb, d = pend[best]
            mid = a + FILL_SPLIT * (b - a)
            pend[best] = (a, mid, sa, 2, d + 1)
            pend.append((mid, b, 2, sb, d + 1))
        pend.sort(key=lambda cl: -max(abs(cl[0]), abs(cl[1])))
        batch, pend = pend[:WIDTH], pend[WIDTH:]
        mids = [0.5 * (a + b) for a, b, _, _, _ in batch]
        Tb = max(_truncation(max(abs(a), abs(b)), M, n) for a, b, _, _, _ in batch)
        tt = _taylor(c, Tb, mids)
        cells += len(batch)
        for l, (a, b, sa, sb, d) in enumerate(batch):
            h, X = 0.5 * (b - a), max(abs(a), abs(b))
            t = [float(v) for v in tt[:, l]]
            bd = _bounds(n, Tb, X, M, t)
            if bd is None:
                return count, 0, cells
            e, rem = bd
            rhs = rem * h ** ORDER + sum((abs(t[j]) + e[j]) * h ** j for j in range(1, ORDER))
            if (abs(t[0]) - e[0]) * SAFE_LO > rhs * SAFE_HI + TINY:
                continue
            rhs = ORDER * rem * h ** (ORDER - 1)
            rhs += sum(j * (abs(t[j]) + e[j]) * h ** (j - 1) for j in range(2, ORDER))
            if (abs(t[1]) - e[1]) * SAFE_LO > rhs * SAFE_HI + TINY:
                ea = sa if sa != 2 else _shift_sign(t, e, rem, -h, h)
                eb = sb if sb != 2 else _shift_sign(t, e, rem, h, h)
                if ea != 2 and eb != 2:
                    count += ea * eb < 0
                    continue
            if d >= max_depth or h <= 4.0 * UNIT * max(abs(mids[l]), 1e-290):
                return count, 0, cells
            mid = mids[l]
            sm = _sign(t[0], e[0])
            if sm == 2:
                mid = a + 0.375 * (b - a)
            if not a < mid < b:
                return count, 0, cells
            pend.append((a, mid, sa, sm, d + 1))
            pend.append((mid, b, sm, sb, d + 1))
    return count, 1, cells


def point_signs(C, xs, M):
    C = np.ascontiguousarray(C, dtype=float)
    n = C.shape[1] - 1
    return np.array([_point_sign(C[i], n, float(xs[i]), float(M[i])) for i in range(len(C))],
                    dtype=np.int8)


def count_open_batch(C, lo, hi, s_lo, s_hi, M, max_depth=100):
    C = np.ascontiguousarray(C, dtype=float)
    n = C.shape[1] - 1
    P = len(C)
    counts = np.zeros(P, dtype=np.int64)
    ok = np.zeros(P, dtype=np.int8)
    cells = np.zeros(P, dtype=np.int64)
    for i in range(P):
        counts[i], ok[i], cells[i] = _count_open(C[i], n, float(lo[i]), float(hi[i]),
                                                 int(s_lo[i]), int(s_hi[i]), float(M[i]),
                                                 max_depth)
    return counts, ok, cells
