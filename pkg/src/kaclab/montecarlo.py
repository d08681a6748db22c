"""Monte Carlo estimation of expected real-root counts and their constants.

Trials are keyed by (seed, trial index): a trial's coefficients are the
quantiles of its own counter-based uniform stream, and all degrees in a
schedule use prefixes of one draw. Work is cut into fixed chunks of trial
indices and every chunk returns integer sums, so any worker count reduces
to the same bits.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gauss
from .distributions import CoefficientLaw, CouplingStream, quantile
from .results import ConstantEstimate, EstimateResult, cauchy_gap, log_weight
from .rootcount import ZERO, IntervalSpec, batch_count

CHUNK = 256
BATCH = 32
UNCERTIFIED_LIMIT = 1e-3
TAIL_EPS = 1e-9
DEFAULT_C_VALUES = (8, 16, 32, 64)


class CertificationError(RuntimeError):
    """Too many samples could not be counted with a certificate."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def default_workers() -> int:
    env = os.environ.get("KACLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"KACLAB_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


@dataclass
class Tally:
    """Exact integer sums for one (degree, interval) cell."""
    s1: int = 0
    s2: int = 0
    k: int = 0
    degenerate: int = 0
    uncertified: int = 0

    def add(self, counts, valid, degenerate, uncertified):
        c = counts[valid].astype(object)
        self.s1 += int(sum(c))
        self.s2 += int(sum(v * v for v in c))
        self.k += int(valid.sum())
        self.degenerate += int(degenerate.sum())
        self.uncertified += int(uncertified.sum())

    def merge(self, o: "Tally"):
        self.s1 += o.s1
        self.s2 += o.s2
        self.k += o.k
        self.degenerate += o.degenerate
        self.uncertified += o.uncertified

    def mean_stderr(self):
        if self.k == 0:
            return math.nan, math.nan
        mean = self.s1 / self.k
        if self.k < 2:
            return mean, math.nan
        var = (self.s2 - self.s1 * self.s1 / self.k) / (self.k - 1)
        return mean, math.sqrt(max(var, 0.0) / self.k)

    def result(self, degree: int, interval: IntervalSpec) -> EstimateResult:
        mean, se = self.mean_stderr()
        return EstimateResult(mean, se, self.k, degree, interval, self.degenerate,
                              self.uncertified)


def _draw(law: CoefficientLaw, stream: CouplingStream, trials, width: int) -> np.ndarray:
    U = np.empty((len(trials), width))
    for i, t in enumerate(trials):
        U[i] = stream.uniforms(int(t), width)
    return quantile(law, U)


def _valid_masks(bc, interval: IntervalSpec):
    if interval.is_point and interval.lo == 0:
        # the tally at 0: an all-zero sample contributes 0 and stays in the mean
        return bc.certified.copy()
    return bc.certified & ~bc.all_zero


def _direct_chunk(args):
    law, ns, intervals, seed, t0, t1, check = args
    stream = CouplingStream(seed)
    width = max(ns) + 1
    tallies = {(n, str(iv)): Tally() for n in ns for iv in intervals}
    violations = 0
    for b0 in range(t0, t1, BATCH):
        X = _draw(law, stream, range(b0, min(b0 + BATCH, t1)), width)
        for n in ns:
            C = np.ascontiguousarray(X[:, : n + 1])
            per = []
            for iv in intervals:
                bc = batch_count(C, iv)
                valid = _valid_masks(bc, iv)
                tallies[(n, str(iv))].add(bc.counts, valid, bc.all_zero, ~bc.certified)
                per.append((bc.counts, valid))
            if check == "conservation":
                # parts (all but last) must add up to the whole (last) per sample
                ok = np.logical_and.reduce([v for _, v in per])
                total = sum(c for c, _ in per[:-1])
                violations += int(np.sum(ok & (total != per[-1][0])))
    return tallies, violations


def _run(fn, jobs, workers):
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
        return list(ex.map(fn, jobs))


def _chunks(trials: int):
    return [(t, min(t + CHUNK, trials)) for t in range(0, trials, CHUNK)]


def _check_certified(tally: Tally, what: str):
    total = tally.k + tally.uncertified
    if total and tally.uncertified > UNCERTIFIED_LIMIT * total:
        raise CertificationError(f"{what}: {tally.uncertified} of {total} samples uncertified")


def simulate(law: CoefficientLaw, ns, intervals, trials: int, seed: int,
             workers: int | None = None, check: str | None = None):
    """Tallies keyed by (n, str(interval)) over trial indices 0..trials-1."""
    ns = sorted(set(int(n) for n in ns))
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if ns[0] < 0:
        raise ConfigError("degrees must be >= 0")
    jobs = [(law, ns, list(intervals), seed, a, b, check) for a, b in _chunks(trials)]
    merged = {(n, str(iv)): Tally() for n in ns for iv in intervals}
    violations = 0
    for tallies, v in _run(_direct_chunk, jobs, workers):
        for key, t in tallies.items():
            merged[key].merge(t)
        violations += v
    for (n, iv), t in merged.items():
        _check_certified(t, f"{law.name} n={n} {iv}")
    return merged, violations


def estimate_expected_roots(law: CoefficientLaw, n: int, interval: IntervalSpec, trials: int,
                            seed: int, workers: int | None = None) -> EstimateResult:
    """Mean and standard error of certified counts on the interval."""
    tallies, _ = simulate(law, [n], [interval], trials, seed, workers)
    return tallies[(n, str(interval))].result(n, interval)


def _check_schedule(ns):
    ns = list(ns)
    if len(ns) < 3:
        raise ConfigError("the degree schedule needs at least 3 entries")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("the degree schedule must be strictly increasing")
    return ns


def _centered(law_name, interval, ns, tallies):
    w = log_weight(interval)
    rows = []
    for n in ns:
        mean, se = tallies[(n, str(interval))].mean_stderr()
        rows.append((n, mean - w * math.log(n), se))
    vals = [v for _, v, _ in rows]
    return ConstantEstimate(vals[-1], rows[-1][2], rows, cauchy_gap(vals), law_name)


def estimate_constant(law: CoefficientLaw, interval: IntervalSpec, n_schedule, trials: int,
                      seed: int, workers: int | None = None) -> ConstantEstimate:
    """Centered means E N - w(I) log n along the schedule; the last one is the estimate."""
    ns = _check_schedule(n_schedule)
    tallies, _ = simulate(law, ns, [interval], trials, seed, workers)
    return _centered(law.name, interval, ns, tallies)


def zero_multiplicity_expectation(p: float, n: int | float = math.inf) -> float:
    """sum_{m=1}^{n} m p^m (1 - p), or p / (1 - p) for n = inf."""
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    if math.isinf(n):
        return p / (1.0 - p)
    return sum(m * p ** m * (1.0 - p) for m in range(1, int(n) + 1))


# ---------------------------------------------------------------------------
# truncated power series estimator


@dataclass
class TruncatedSeries:
    radius: float
    truncation: int
    tail_bound: float
    tail_safety_factor: float = 1.0
    coefficients: np.ndarray | None = None

    @classmethod
    def for_cutoff(cls, C: float, eps: float = TAIL_EPS, safety: float = 1.0):
        r = 1.0 - 1.0 / C
        N = max(1, math.ceil(math.log(eps * (1.0 - r)) / math.log(r)))
        return cls(r, N, r ** (N + 1) / (1.0 - r) * safety, safety)


_GAUSS_QUARTER = None


def gaussian_quarter_constant() -> float:
    """C_Gau restricted to (0, 1]: the quadrature constant at n = 2^16."""
    global _GAUSS_QUARTER
    if _GAUSS_QUARTER is None:
        est = gauss.gaussian_constant(IntervalSpec(0.0, 1.0, False, True),
                                      [2 ** k for k in range(12, 17)])
        _GAUSS_QUARTER = est.value
    return _GAUSS_QUARTER


def _corollary_chunk(args):
    law, series, seed, t0, t1 = args
    stream = CouplingStream(seed)
    width = 2 * max(s.truncation for s in series) + 1
    tallies = [Tally() for _ in series]
    unstable = [0] * len(series)
    for b0 in range(t0, t1, BATCH):
        X = _draw(law, stream, range(b0, min(b0 + BATCH, t1)), width)
        for j, s in enumerate(series):
            iv = IntervalSpec(0.0, s.radius, False, False)
            a = batch_count(np.ascontiguousarray(X[:, : s.truncation + 1]), iv)
            b = batch_count(np.ascontiguousarray(X[:, : 2 * s.truncation + 1]), iv)
            valid = a.certified & b.certified & ~a.all_zero
            tallies[j].add(a.counts, valid, a.all_zero, ~(a.certified & b.certified))
            unstable[j] += int(np.sum(valid & (a.counts != b.counts)))
    return tallies, unstable


def estimate_constant_corollary(law: CoefficientLaw, C_values=DEFAULT_C_VALUES, trials: int = 10000,
                                seed: int = 0, workers: int | None = None,
                                instability_limit: float = UNCERTIFIED_LIMIT) -> ConstantEstimate:
    """C_{xi,(0,1]} through the power series: counts on (0, 1 - 1/C) of the truncated
    series, minus (1/2pi) log C, plus the Gaussian (0, 1] constant minus (1/2pi) log 2.

    Every sample is recounted with twice as many terms; the fraction of
    disagreements must stay below instability_limit.
    """
    Cs = [float(c) for c in C_values]
    if not Cs or any(c <= 1 for c in Cs) or any(b <= a for a, b in zip(Cs, Cs[1:])):
        raise ConfigError("C values must exceed 1 and increase")
    series = [TruncatedSeries.for_cutoff(c) for c in Cs]
    jobs = [(law, series, seed, a, b) for a, b in _chunks(trials)]
    tallies = [Tally() for _ in series]
    unstable = [0] * len(series)
    for ts, us in _run(_corollary_chunk, jobs, workers):
        for j in range(len(series)):
            tallies[j].merge(ts[j])
            unstable[j] += us[j]
    base = gaussian_quarter_constant() - math.log(2.0) / (2 * math.pi)
    rows = []
    for c, s, t, u in zip(Cs, series, tallies, unstable):
        _check_certified(t, f"{law.name} series C={c:g}")
        if u > instability_limit * max(t.k, 1):
            raise CertificationError(f"{law.name} C={c:g}: truncation at N={s.truncation} "
                                     f"changed {u} of {t.k} counts")
        mean, se = t.mean_stderr()
        rows.append((c, base + mean - math.log(c) / (2 * math.pi), se))
    vals = [v for _, v, _ in rows]
    est = ConstantEstimate(vals[-1], rows[-1][2], rows, cauchy_gap(vals), law.name)
    est.instability = dict(zip(Cs, unstable))
    return est


# ---------------------------------------------------------------------------
# interval decomposition and continuity


def decomposition_regions(C: float, delta: float):
    if not 0 < delta < 1 - 1 / C:
        raise ConfigError("need 0 < delta < 1 - 1/C")
    r = 1.0 - 1.0 / C
    return {
        "near0": IntervalSpec(0.0, delta, False, True),
        "bulk": IntervalSpec(delta, r, False, False),
        "near1": IntervalSpec(r, 1.0, True, True),
        "whole": IntervalSpec(0.0, 1.0, False, True),
    }


def decomposition_report(law: CoefficientLaw, n: int, C: float, delta: float, trials: int,
                         seed: int, workers: int | None = None) -> dict:
    """Estimates on (0, delta], (delta, 1 - 1/C), [1 - 1/C, 1] and (0, 1], plus the tally at 0.

    Per-sample conservation (the three parts add to the whole) is checked on
    every sample and reported as 'violations'.
    """
    regions = decomposition_regions(C, delta)
    ivs = [regions[k] for k in ("near0", "bulk", "near1", "whole")]
    tallies, violations = simulate(law, [n], ivs, trials, seed, workers, check="conservation")
    out = {k: tallies[(n, str(iv))].result(n, iv) for k, iv in regions.items()}
    zt, _ = simulate(law, [n], [ZERO], trials, seed, workers)
    out["zero"] = zt[(n, str(ZERO))].result(n, ZERO)
    out["violations"] = violations
    return out


def coupled_continuity_experiment(law_sequence, law_limit: CoefficientLaw, interval: IntervalSpec,
                                  n_schedule, trials: int, seed: int, workers: int | None = None,
                                  independent: bool = False):
    """Constant estimates for each law and the limit law, all fed the same uniforms.

    Returns (estimates for the sequence, estimate for the limit, gaps). With
    independent=True each law gets its own seed instead.
    """
    ns = _check_schedule(n_schedule)
    limit = estimate_constant(law_limit, interval, ns, trials, seed, workers)
    ests, gaps = [], []
    for i, law in enumerate(law_sequence):
        s = seed if not independent else seed + 1 + i
        e = estimate_constant(law, interval, ns, trials, s, workers)
        ests.append(e)
        gaps.append(abs(e.value - limit.value))
    return ests, limit, gaps
