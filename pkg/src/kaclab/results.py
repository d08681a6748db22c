"""Result records shared by the analytic and Monte Carlo estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .rootcount import IntervalSpec


@dataclass
class EstimateResult:
    mean: float
    stderr: float
    trials: int
    degree: int
    interval: IntervalSpec
    degenerate_samples: int = 0
    uncertified_samples: int = 0


@dataclass
class ConstantEstimate:
    value: float
    stderr: float
    per_n_values: list = field(default_factory=list)  # [(n, centered value, stderr), ...]
    cauchy_gap: float = 0.0
    label: str = ""


def log_weight(interval: IntervalSpec) -> float:
    """Coefficient of log n in E N(I): 1/(2 pi) per one-sided neighbourhood of +-1 inside I."""
    sides = 0
    for pt in (-1.0, 1.0):
        sides += interval.lo < pt <= interval.hi  # (pt - eps, pt) inside I
        sides += interval.lo <= pt < interval.hi  # (pt, pt + eps) inside I
    return sides / (2 * math.pi)


def cauchy_gap(values) -> float:
    vals = list(values)
    if len(vals) < 2:
        return 0.0
    return max(abs(b - a) for a, b in zip(vals, vals[1:]))
