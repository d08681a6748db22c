/* Certified real-root counting for float64 polynomials.
 *
 * A pending list of cells is refined in passes. Each pass evaluates the
 * Taylor expansion (orders 0..KL_ORDER-1) of p at the midpoints of up to
 * KL_WIDTH cells in one sweep over the coefficients, broadcasting every
 * coefficient into two 8-wide vector accumulators. A cell is discarded when
 * its enclosure of p excludes 0, counted when its enclosure of p' excludes 0
 * and both endpoint signs are known, and split otherwise.
 *
 * All enclosures carry explicit radii for rounding (gamma_k analysis of the
 * synthetic division), for the coefficient sum cut at T when |x| < 1, and
 * for the Taylor remainder, bounded through max|c_k|.
 */
#ifndef KL_KCOUNT_H
#define KL_KCOUNT_H

#include <math.h>
#include <stdlib.h>
#include <string.h>

#define KL_ORDER 4
#define KL_WIDTH 16
#define KL_UNIT 1.1102230246251565e-16
#define KL_SAFE_LO (1.0 - 1e-13)
#define KL_SAFE_HI (1.0 + 1e-13)
#define KL_TINY 1e-300
#define KL_FILL_SPLIT 0.49951171875
#define KL_LOG_TAIL (-50.65687204586901) /* log(1e-22) */

typedef double kl_v8 __attribute__((vector_size(64)));

typedef struct {
    double a, b;
    int sa, sb; /* -1, 0, +1 certified; 2 unknown */
    int depth;
} kl_cell;

static inline double kl_gamma(long k) {
    double ku = (double)k * KL_UNIT;
    return ku / (1.0 - ku);
}

static double kl_binom(double n, int k) {
    double r = 1.0;
    for (int i = 0; i < k; i++) r = r * (n - i) / (i + 1);
    return r;
}

/* upper bound for sum_{k=j}^{top} binom(k, j) X^(k-j), X >= 0 */
static double kl_abs_series(double X, long top, int j) {
    double full = INFINITY, partial;
    if (top < j) return 0.0;
    if (X < 1.0) full = 1.0 / pow(1.0 - X, j + 1);
    partial = kl_binom(top + 1.0, j + 1);
    if (X > 1.0) partial *= pow(X, (double)(top - j));
    return fmin(full, partial) * KL_SAFE_HI;
}

/* index past which the dropped coefficient terms are below 1e-22 */
static long kl_truncation(double X, double M, long n) {
    if (X >= 1.0 || n < 64) return n;
    if (X <= 0.0) return n < KL_ORDER ? n : KL_ORDER;
    double lx = log(X), t = 16.0;
    for (int it = 0; it < 4; it++)
        t = (KL_LOG_TAIL - log(fmax(M, 1.0)) - KL_ORDER * log(t + 2.0)) / lx + KL_ORDER;
    if (t + 1.0 >= (double)n) return n;
    return (long)ceil(t) + 1;
}

/* radii e[j] of the computed coefficients t[j] and the remainder bound */
static int kl_bounds(long n, long T, double X, double M,
                     const double *t, double *e, double *rem) {
    double g = kl_gamma(4 * T + 16);
    for (int j = 0; j < KL_ORDER; j++) {
        e[j] = g * M * kl_abs_series(X, T, j) + KL_TINY;
        if (T < n) {
            double rho = X * (T + 2.0) / (T + 2.0 - j);
            if (rho >= 1.0) return 0;
            e[j] += M * kl_binom(T + 1.0, j) * pow(X, (double)(T + 1 - j)) / (1.0 - rho) * KL_SAFE_HI;
        }
        if (!isfinite(t[j]) || !isfinite(e[j])) return 0;
    }
    *rem = M * kl_abs_series(X, n, KL_ORDER);
    return isfinite(*rem);
}

/* Taylor coefficients at 16 points; t[j * KL_WIDTH + l] */
static void kl_horner16(const double *c, long T, const double *m, double *t) {
    kl_v8 s[KL_ORDER], u[KL_ORDER], mv, mw;
    for (int l = 0; l < 8; l++) { mv[l] = m[l]; mw[l] = m[8 + l]; }
    for (int j = 0; j < KL_ORDER; j++) { s[j] = (kl_v8){0}; u[j] = (kl_v8){0}; }
    for (long k = T; k >= 0; k--) {
        double ck = c[k];
        for (int j = KL_ORDER - 1; j > 0; j--) {
            s[j] = s[j] * mv + s[j - 1];
            u[j] = u[j] * mw + u[j - 1];
        }
        s[0] = s[0] * mv + ck;
        u[0] = u[0] * mw + ck;
    }
    for (int j = 0; j < KL_ORDER; j++)
        for (int l = 0; l < 8; l++) {
            t[j * KL_WIDTH + l] = s[j][l];
            t[j * KL_WIDTH + 8 + l] = u[j][l];
        }
}

static void kl_horner1(const double *c, long T, double m, double *t) {
    double s[KL_ORDER] = {0};
    for (long k = T; k >= 0; k--) {
        for (int j = KL_ORDER - 1; j > 0; j--) s[j] = s[j] * m + s[j - 1];
        s[0] = s[0] * m + c[k];
    }
    for (int j = 0; j < KL_ORDER; j++) t[j] = s[j];
}

static inline int kl_sign(double v, double err) {
    if (v * KL_SAFE_LO > err) return 1;
    if (-v * KL_SAFE_LO > err) return -1;
    return 2;
}

/* certified sign of p(x): -1, +1, or 2 when unresolved */
static int kl_point_sign(const double *c, long n, double x, double M) {
    double t[KL_ORDER], e[KL_ORDER], rem;
    double X = fabs(x);
    long T = kl_truncation(X, M, n);
    kl_horner1(c, T, x, t);
    if (!kl_bounds(n, T, X, M, t, e, &rem)) return 2;
    return kl_sign(t[0], e[0]);
}

/* sign of p(m + off) from the Taylor data, |off| <= h */
static int kl_shift_sign(const double *t, const double *e, double rem,
                         double off, double h) {
    double val = 0.0, rad = rem * pow(h, KL_ORDER), p = 1.0, hp = 1.0;
    for (int j = 0; j < KL_ORDER; j++) {
        val += t[j] * p;
        rad += e[j] * hp;
        p *= off;
        hp *= h;
    }
    rad += 8.0 * KL_UNIT * (fabs(val) + rad);
    return kl_sign(val, rad * KL_SAFE_HI + KL_TINY);
}

static double kl_scale(double x, long n) {
    double s = fabs(1.0 - fabs(x));
    double floor_ = 1.0 / (double)(n + 1);
    return s > floor_ ? s : floor_;
}

static int kl_cmp_x(const void *pa, const void *pb) {
    const kl_cell *a = (const kl_cell *)pa, *b = (const kl_cell *)pb;
    double xa = fmax(fabs(a->a), fabs(a->b)), xb = fmax(fabs(b->a), fabs(b->b));
    return (xa < xb) - (xa > xb);
}

/* Count roots of p in the open interval (lo, hi); slo/shi are the certified
 * endpoint signs (0 for an endpoint root). Returns 1 when certified. */
static int kl_count_open(const double *c, long n, double lo, double hi,
                         int slo, int shi, double M, int max_depth,
                         long *count_out, long *cells_out) {
    long cap = 256, np_ = 0, count = 0, cells = 0;
    int ok = 1;
    kl_cell *pend, *tmp;
    double m[KL_WIDTH], tt[KL_ORDER * KL_WIDTH];
    *count_out = 0;
    *cells_out = 0;
    if (n < 0 || !(lo < hi)) return 1;
    pend = (kl_cell *)malloc(cap * sizeof(kl_cell));
    if (!pend) return 0;
    pend[np_++] = (kl_cell){lo, hi, slo, shi, 0};

    while (np_ > 0 && ok) {
        /* fill the lanes by splitting the coarsest cells */
        while (np_ < KL_WIDTH) {
            long best = -1;
            double bq = 0.0;
            for (long i = 0; i < np_; i++) {
                double h = 0.5 * (pend[i].b - pend[i].a);
                double mid = 0.5 * (pend[i].a + pend[i].b);
                double q = h / kl_scale(mid, n);
                if (pend[i].depth < max_depth - 1 && q > bq && q > 1e-3) { bq = q; best = i; }
            }
            if (best < 0) break;
            kl_cell cl = pend[best];
            /* off-centre so short dyadic points (0, 1/2, ...) never become
               endpoints of unevaluated cells */
            double mid = cl.a + KL_FILL_SPLIT * (cl.b - cl.a);
            pend[best] = (kl_cell){cl.a, mid, cl.sa, 2, cl.depth + 1};
            pend[np_++] = (kl_cell){mid, cl.b, 2, cl.sb, cl.depth + 1};
        }
        /* cells nearest |x| = 1 first, so cheap cells share cheap passes */
        qsort(pend, np_, sizeof(kl_cell), kl_cmp_x);
        long w = np_ < KL_WIDTH ? np_ : KL_WIDTH;
        long Tb = 0;
        for (long l = 0; l < KL_WIDTH; l++) {
            if (l < w) {
                m[l] = 0.5 * (pend[l].a + pend[l].b);
                long T = kl_truncation(fmax(fabs(pend[l].a), fabs(pend[l].b)), M, n);
                if (T > Tb) Tb = T;
            } else {
                m[l] = 0.0;
            }
        }
        kl_horner16(c, Tb, m, tt);
        cells += w;

        kl_cell batch[KL_WIDTH];
        memcpy(batch, pend, w * sizeof(kl_cell));
        memmove(pend, pend + w, (np_ - w) * sizeof(kl_cell));
        np_ -= w;

        for (long l = 0; l < w && ok; l++) {
            kl_cell cl = batch[l];
            double t[KL_ORDER], e[KL_ORDER], rem, lhs, rhs, hp;
            double h = 0.5 * (cl.b - cl.a), X = fmax(fabs(cl.a), fabs(cl.b));
            for (int j = 0; j < KL_ORDER; j++) t[j] = tt[j * KL_WIDTH + l];
            if (!kl_bounds(n, Tb, X, M, t, e, &rem)) { ok = 0; break; }
            /* exclusion */
            rhs = rem * pow(h, KL_ORDER);
            hp = h;
            for (int j = 1; j < KL_ORDER; j++) { rhs += (fabs(t[j]) + e[j]) * hp; hp *= h; }
            lhs = fabs(t[0]) - e[0];
            if (lhs * KL_SAFE_LO > rhs * KL_SAFE_HI + KL_TINY) continue;
            /* monotone */
            rhs = KL_ORDER * rem * pow(h, KL_ORDER - 1);
            hp = h;
            for (int j = 2; j < KL_ORDER; j++) { rhs += j * (fabs(t[j]) + e[j]) * hp; hp *= h; }
            lhs = fabs(t[1]) - e[1];
            if (lhs * KL_SAFE_LO > rhs * KL_SAFE_HI + KL_TINY) {
                int sa = cl.sa, sb = cl.sb;
                if (sa == 2) sa = kl_shift_sign(t, e, rem, -h, h);
                if (sb == 2) sb = kl_shift_sign(t, e, rem, h, h);
                if (sa != 2 && sb != 2) {
                    if (sa * sb < 0) count++;
                    continue;
                }
            }
            /* split */
            if (cl.depth >= max_depth || h <= 4.0 * KL_UNIT * fmax(fabs(m[l]), 1e-290)) {
                ok = 0;
                break;
            }
            double mid = m[l];
            int sm = kl_sign(t[0], e[0]);
            if (sm == 2) mid = cl.a + 0.375 * (cl.b - cl.a);
            if (!(cl.a < mid && mid < cl.b)) { ok = 0; break; }
            if (np_ + 2 > cap) {
                cap *= 2;
                tmp = (kl_cell *)realloc(pend, cap * sizeof(kl_cell));
                if (!tmp) { ok = 0; break; }
                pend = tmp;
            }
            pend[np_++] = (kl_cell){cl.a, mid, cl.sa, sm, cl.depth + 1};
            pend[np_++] = (kl_cell){mid, cl.b, sm, cl.sb, cl.depth + 1};
        }
    }
    free(pend);
    *count_out = count;
    *cells_out = cells;
    return ok;
}

#endif
