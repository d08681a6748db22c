# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled certified root-counting kernels.

The numerical core lives in ``_kcount.h``; this module only moves arrays
in and out. Counts are certified: a problem whose cells cannot be resolved
in float64 comes back with ``ok == 0`` and must be recounted exactly.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef extern from "_kcount.h" nogil:
    int kl_point_sign(const double *c, long n, double x, double M)
    int kl_count_open(const double *c, long n, double lo, double hi,
                      int slo, int shi, double M, int max_depth,
                      long *count_out, long *cells_out)


def point_signs(const double[:, ::1] C, const double[::1] xs, const double[::1] M):
    """Certified sign of each row polynomial at xs[i]; 2 marks unresolved."""
    cdef Py_ssize_t P = C.shape[0], i
    cdef long n = C.shape[1] - 1
    out = np.empty(P, dtype=np.int8)
    cdef cnp.int8_t[::1] o = out
    with nogil:
        for i in range(P):
            o[i] = kl_point_sign(&C[i, 0], n, xs[i], M[i])
    return out


def count_open_batch(const double[:, ::1] C, const double[::1] lo, const double[::1] hi,
                     const cnp.int8_t[::1] s_lo, const cnp.int8_t[::1] s_hi,
                     const double[::1] M, int max_depth=100):
    """Count roots of each row polynomial inside (lo[i], hi[i]).

    Endpoint signs must be certified by the caller (0 for a root at the
    endpoint). Returns ``(counts, ok, cells)``.
    """
    cdef Py_ssize_t P = C.shape[0], i
    cdef long n = C.shape[1] - 1
    cdef long cnt, cl
    counts = np.zeros(P, dtype=np.int64)
    ok = np.zeros(P, dtype=np.int8)
    cells = np.zeros(P, dtype=np.int64)
    cdef cnp.int64_t[::1] k = counts, w = cells
    cdef cnp.int8_t[::1] f = ok
    with nogil:
        for i in range(P):
            f[i] = kl_count_open(&C[i, 0], n, lo[i], hi[i], s_lo[i], s_hi[i],
                                 M[i], max_depth, &cnt, &cl)
            k[i] = cnt
            w[i] = cl
    return counts, ok, cells
