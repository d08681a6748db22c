"""Compare the compiled counting kernel with the numpy fallback.

Counts the roots of Gaussian polynomials on (0, 1), the costliest quarter,
for a few degrees and prints milliseconds per polynomial for each backend.

    python benchmarks/bench_kernels.py --degrees 64,1024,16384 --rows 64
"""
import argparse
import time

import numpy as np

from kaclab import _fallback

try:
    from kaclab import _kernel
except ImportError:
    _kernel = None


def workload(n, rows, seed=0):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((rows, n + 1))
    M = np.abs(C).max(axis=1)
    lo, hi = np.zeros(rows), np.ones(rows)
    s_lo = np.sign(C[:, 0]).astype(np.int8)
    s_hi = np.sign(C.sum(axis=1)).astype(np.int8)
    return C, lo, hi, s_lo, s_hi, M


def timed(mod, args, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t = time.perf_counter()
        result = mod.count_open_batch(*args, 100)
        best = min(best, time.perf_counter() - t)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degrees", default="64,1024,16384")
    ap.add_argument("--rows", type=int, default=64)
    ap.add_argument("--fallback-rows", type=int, default=8, help="rows for the slow backend")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"{'degree':>8} {'compiled ms':>12} {'python ms':>10} {'speedup':>8} {'agree':>6}")
    for n in (int(x) for x in args.degrees.split(",")):
        data = workload(n, args.rows)
        small = tuple(a[: args.fallback_rows] for a in data)
        tp, rp = timed(_fallback, small, 1)
        ms_py = tp / args.fallback_rows * 1e3
        if _kernel is None:
            print(f"{n:>8} {'n/a':>12} {ms_py:>10.3f} {'':>8} {'':>6}")
            continue
        tc, rc = timed(_kernel, data, args.repeat)
        ms_c = tc / args.rows * 1e3
        agree = np.array_equal(rc[0][: args.fallback_rows], rp[0]) and bool(rc[1].all())
        print(f"{n:>8} {ms_c:>12.3f} {ms_py:>10.3f} {ms_py / ms_c:>8.1f} {str(agree):>6}")


if __name__ == "__main__":
    main()
