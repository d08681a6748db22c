"""Coefficient laws, counter-based uniforms and quantile coupling.

Every draw goes through a law's quantile function applied to a uniform
that depends only on (seed, trial, coefficient index). Feeding the same
stream to two laws therefore gives coupled coefficients, and a trial can
be replayed or extended without touching any other trial.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate, special

MOMENT_TOL = 1e-12
_U_SCALE = 2.0 ** -53
_KEY_SALT = 0x6B61636C61622D31  # keeps the Philox key away from small integers


class LawError(ValueError):
    """Raised for invalid law parameters or violated moment invariants."""


@dataclass(frozen=True)
class CoefficientLaw:
    name: str
    kind: str  # "discrete-atoms" or "continuous-builtin"
    atoms: tuple = ()  # ((value, Fraction mass), ...) sorted by value
    eps0: float = 1.0
    m0_bound: float = math.inf
    _cum: np.ndarray = field(default=None, repr=False, compare=False)
    _values: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete-atoms"

    @property
    def zero_mass(self) -> Fraction | float:
        if not self.is_discrete:
            return 0.0
        return sum((m for v, m in self.atoms if v == 0), Fraction(0))

    @property
    def support(self) -> tuple:
        return tuple(v for v, _ in self.atoms)

    def quantile(self, u):
        return quantile(self, u)


def _discrete(name: str, atoms, eps0: float = 1.0, m0_bound: float | None = None) -> CoefficientLaw:
    merged: dict[float, Fraction] = {}
    for v, m in atoms:
        m = Fraction(m)
        if m < 0:
            raise LawError(f"{name}: negative mass {m} at {v}")
        if m > 0:
            merged[float(v)] = merged.get(float(v), Fraction(0)) + m
    pairs = tuple(sorted(merged.items()))
    if sum(m for _, m in pairs) != 1:
        raise LawError(f"{name}: atom masses sum to {sum(m for _, m in pairs)}, not 1")
    cum = np.cumsum([float(m) for _, m in pairs])
    law = CoefficientLaw(name, "discrete-atoms", pairs, eps0, math.inf,
                         cum, np.array([v for v, _ in pairs]))
    if m0_bound is None:
        m0_bound = float(sum(float(m) * abs(v) ** (2 + eps0) for v, m in pairs))
    object.__setattr__(law, "m0_bound", m0_bound * (1 + 1e-12))
    validate_moments(law)
    return law


def _continuous(name: str) -> CoefficientLaw:
    law = CoefficientLaw(name, "continuous-builtin")
    _, _, third = _continuous_moments(law)
    object.__setattr__(law, "m0_bound", third * (1 + 1e-12))
    return law


def _as_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def symmetric_atom_law(name: str, p) -> CoefficientLaw:
    """0 with mass p and +-1/sqrt(1-p) with mass (1-p)/2 each."""
    p = _as_fraction(p)
    if not 0 <= p < 1:
        raise LawError(f"{name}: parameter {p} outside [0, 1)")
    a = 1.0 / math.sqrt(1.0 - float(p))
    atoms = [(-a, (1 - p) / 2), (a, (1 - p) / 2)]
    if p > 0:
        atoms.append((0.0, p))
    return _discrete(name, atoms)


def gaussian_discretization(m: int) -> CoefficientLaw:
    """m equal-mass atoms at midpoint normal quantiles, rescaled to unit variance."""
    if m < 2:
        raise LawError("gaussian discretization needs at least 2 atoms")
    z = special.ndtri((np.arange(m) + 0.5) / m)
    z = 0.5 * (z - z[::-1])  # exact antisymmetry, so the mean is exactly 0
    z = z / math.sqrt(float(np.mean(z * z)))
    return _discrete(f"gauss-quantile({m})", [(float(v), Fraction(1, m)) for v in z])


def ternary_path_law(q, m: int) -> CoefficientLaw:
    """ternary(q_m) with q_m = q + (1 - q) / (2m), a sequence tending to ternary(q)."""
    q = _as_fraction(q)
    if m < 1:
        raise LawError("ternary path index must be >= 1")
    qm = q + (1 - q) / (2 * m)
    return symmetric_atom_law(f"ternary({qm})", qm)


_PARAM = re.compile(r"^([a-z\-]+)\(([^()]*)\)$")


def builtin_law(name: str, param=None) -> CoefficientLaw:
    """Look up a named law. Parametrised names accept 'ternary(1/3)' or a param."""
    mt = _PARAM.match(name.strip())
    if mt:
        name, param = mt.group(1), mt.group(2)
    name = name.strip()
    if name == "gaussian":
        return _continuous("gaussian")
    if name == "uniform-sym":
        return _continuous("uniform-sym")
    if name == "rademacher":
        return _discrete("rademacher", [(-1.0, Fraction(1, 2)), (1.0, Fraction(1, 2))])
    if name == "four-moment":
        a, b = math.sqrt(0.5), math.sqrt(5.0)
        return _discrete("four-moment", [(-b, Fraction(1, 18)), (-a, Fraction(4, 9)),
                                         (a, Fraction(4, 9)), (b, Fraction(1, 18))])
    if name in ("ternary", "zero-atom"):
        if param is None:
            raise LawError(f"{name} needs a parameter")
        p = _as_fraction(param)
        if name == "ternary" and not 0 < p < 1:
            raise LawError(f"ternary: q={p} outside (0, 1)")
        return symmetric_atom_law(f"{name}({param})", p)
    if name == "gauss-quantile":
        if param is None:
            raise LawError("gauss-quantile needs an atom count")
        return gaussian_discretization(int(param))
    raise LawError(f"unknown law {name!r}")


def law_from_json(obj) -> CoefficientLaw:
    """Custom discrete law from {"name": ..., "atoms": [[value, num, den], ...]}."""
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    try:
        name = str(obj["name"])
        atoms = [(float(v), Fraction(int(num), int(den))) for v, num, den in obj["atoms"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise LawError(f"bad law config: {exc}") from exc
    return _discrete(name, atoms)


def law_to_json(law: CoefficientLaw) -> dict:
    if not law.is_discrete:
        return {"name": law.name}
    return {"name": law.name,
            "atoms": [[v, m.numerator, m.denominator] for v, m in law.atoms]}


def _density(law: CoefficientLaw):
    if law.name == "gaussian":
        return lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), -math.inf, math.inf
    r = math.sqrt(3.0)
    return lambda x: 1.0 / (2 * r), -r, r


def _continuous_moments(law: CoefficientLaw, eps0: float = 1.0):
    f, lo, hi = _density(law)
    out = []
    for g in (lambda x: x, lambda x: x * x, lambda x: abs(x) ** (2 + eps0)):
        if math.isinf(lo):
            v = integrate.quad(lambda x: g(x) * f(x), lo, 0, epsabs=1e-13, epsrel=1e-13)[0]
            v += integrate.quad(lambda x: g(x) * f(x), 0, hi, epsabs=1e-13, epsrel=1e-13)[0]
        else:
            v = integrate.quad(lambda x: g(x) * f(x), lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
        out.append(v)
    return tuple(out)


def moment(law: CoefficientLaw, k: float, absolute: bool = True):
    """E|xi|^k (or E xi^k); exact rational for discrete laws when k is an integer."""
    if law.is_discrete:
        if float(k).is_integer():
            k = int(k)
            return sum((m * Fraction(v) ** k if not absolute else m * abs(Fraction(v)) ** k
                        for v, m in law.atoms), Fraction(0))
        return sum(float(m) * abs(v) ** k for v, m in law.atoms)
    f, lo, hi = _density(law)
    g = (lambda x: abs(x) ** k) if absolute else (lambda x: x ** k)
    pieces = [(lo, 0), (0, hi)] if math.isinf(lo) else [(lo, hi)]
    return sum(integrate.quad(lambda x: g(x) * f(x), a, b, epsabs=1e-14)[0] for a, b in pieces)


def validate_moments(law: CoefficientLaw):
    """Return (mean, variance, E|xi|^(2+eps0)); raise LawError on a violated invariant."""
    if law.is_discrete:
        if sum(m for _, m in law.atoms) != 1:
            raise LawError(f"{law.name}: masses do not sum to 1")
        mean = sum((m * Fraction(v) for v, m in law.atoms), Fraction(0))
        var = sum((m * Fraction(v) ** 2 for v, m in law.atoms), Fraction(0)) - mean * mean
        absm = sum(float(m) * abs(v) ** (2 + law.eps0) for v, m in law.atoms)
        if law.zero_mass >= 1:
            raise LawError(f"{law.name}: zero mass {law.zero_mass} must be < 1")
        mean, var = float(mean), float(var)
    else:
        mean, var, absm = _continuous_moments(law, law.eps0)
    if abs(mean) > MOMENT_TOL:
        raise LawError(f"{law.name}: mean {mean!r} is not 0")
    if abs(var - 1) > MOMENT_TOL:
        raise LawError(f"{law.name}: variance {var!r} is not 1")
    if absm > law.m0_bound:
        raise LawError(f"{law.name}: E|xi|^{2 + law.eps0} = {absm!r} exceeds M0 = {law.m0_bound!r}")
    return mean, var, absm


def quantile(law: CoefficientLaw, u):
    """Left-continuous generalized inverse inf{x : F(x) >= u}; vectorised over u."""
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise LawError("quantile needs u in the open interval (0, 1)")
    if law.name == "gaussian":
        out = special.ndtri(arr)
    elif law.name == "uniform-sym":
        out = (2.0 * arr - 1.0) * math.sqrt(3.0)
    else:
        out = law._values[_atom_index(law, np.atleast_1d(arr))].reshape(arr.shape)
    return out if np.ndim(u) else float(out)


def _atom_index(law: CoefficientLaw, u: np.ndarray) -> np.ndarray:
    cum = law._cum
    idx = np.searchsorted(cum, u, side="left")
    np.minimum(idx, len(cum) - 1, out=idx)
    # the float cumulative masses can be off by an ulp; settle near-ties exactly
    near = np.abs(u - cum[np.maximum(idx - 1, 0)]) < 1e-14
    near |= np.abs(u - cum[idx]) < 1e-14
    if np.any(near):
        exact = np.cumsum([m for _, m in law.atoms])
        for i in np.flatnonzero(near):
            fu = Fraction(float(u.flat[i]))
            idx.flat[i] = next(j for j, c in enumerate(exact) if c >= fu)
    return idx


class CouplingStream:
    """Counter-based uniforms keyed by (seed, trial, coefficient index).

    Uniforms are ((raw >> 11) + 0.5) * 2^-53, so they lie strictly inside
    (0, 1) and are exact dyadic rationals.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def uniforms(self, trial: int, count: int, start: int = 0) -> np.ndarray:
        if count <= 0:
            return np.empty(0)
        block, skip = divmod(start, 4)
        bg = np.random.Philox(key=[self.seed, _KEY_SALT], counter=[block, 0, int(trial), 0])
        raw = bg.random_raw(skip + count)[skip:]
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U_SCALE

    def __repr__(self):
        return f"CouplingStream(seed={self.seed})"


def sample(law: CoefficientLaw, stream: CouplingStream, count: int, trial: int = 0,
           start: int = 0) -> np.ndarray:
    """count draws of law for coefficient indices start.. of the given trial."""
    if count < 1:
        raise LawError("count must be >= 1")
    return quantile(law, stream.uniforms(trial, count, start))


def sample_sequence(laws: Sequence[CoefficientLaw], stream: CouplingStream, count: int,
                    trial: int = 0, start: int = 0) -> np.ndarray:
    """Non-identically distributed draws: coefficient k follows laws[k % len(laws)]."""
    u = stream.uniforms(trial, count, start)
    out = np.empty(count)
    k = (np.arange(count) + start) % len(laws)
    for j, law in enumerate(laws):
        sel = k == j
        if np.any(sel):
            out[sel] = quantile(law, u[sel])
    return out
