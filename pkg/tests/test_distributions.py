import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kaclab.distributions import (CouplingStream, LawError, builtin_law, gaussian_discretization,
                                  law_from_json, law_to_json, moment, quantile, sample,
                                  sample_sequence, ternary_path_law, validate_moments)

BUILTINS = ["gaussian", "uniform-sym", "rademacher", "four-moment", "ternary(1/3)",
            "zero-atom(1/2)", "zero-atom(0.9)", "gauss-quantile(16)"]


@pytest.mark.parametrize("name", BUILTINS)
def test_builtin_moments(name):
    mean, var, m3 = validate_moments(builtin_law(name))
    assert abs(mean) <= 1e-12
    assert abs(var - 1) <= 1e-12
    assert m3 <= builtin_law(name).m0_bound


def test_four_moment_atoms():
    law = builtin_law("four-moment")
    vals = sorted(v for v, _ in law.atoms)
    assert vals == pytest.approx([-math.sqrt(5), -1 / math.sqrt(2), 1 / math.sqrt(2), math.sqrt(5)])
    masses = {round(v, 12): m for v, m in law.atoms}
    assert masses[round(math.sqrt(5), 12)] == Fraction(1, 18)
    assert masses[round(1 / math.sqrt(2), 12)] == Fraction(4, 9)
    assert sum(m for _, m in law.atoms) == 1


def test_four_moment_fourth_moment():
    assert float(moment(builtin_law("four-moment"), 4)) == pytest.approx(3.0, abs=1e-12)


def test_zero_mass():
    assert builtin_law("rademacher").zero_mass == 0
    assert builtin_law("zero-atom(1/2)").zero_mass == Fraction(1, 2)
    assert float(moment(builtin_law("zero-atom(1/2)"), 2)) == pytest.approx(1.0, abs=1e-12)
    assert float(moment(builtin_law("ternary(1/3)"), 2)) == pytest.approx(1.0, abs=1e-12)


def test_uniform_support():
    law = builtin_law("uniform-sym")
    assert quantile(law, 1e-12) == pytest.approx(-math.sqrt(3), abs=1e-9)
    assert float(quantile(law, 0.5)) == 0.0


@pytest.mark.parametrize("bad", ["ternary(0)", "ternary(1)", "zero-atom(1)", "zero-atom(-0.1)",
                                 "ternary", "nope", "gauss-quantile(1)"])
def test_bad_parameters(bad):
    with pytest.raises(LawError):
        builtin_law(bad)


def test_custom_law_rejects_bad_moments():
    with pytest.raises(LawError):
        law_from_json({"name": "biased", "atoms": [[1.0, 1, 1]]})
    with pytest.raises(LawError):
        law_from_json({"name": "short", "atoms": [[1.0, 1, 3], [-1.0, 1, 3]]})
    with pytest.raises(LawError):
        law_from_json({"name": "broken"})


def test_json_roundtrip():
    law = builtin_law("four-moment")
    again = law_from_json(json.dumps(law_to_json(law)))
    assert again.atoms == law.atoms


def test_quantile_examples():
    assert float(quantile(builtin_law("rademacher"), 0.3)) == -1.0
    assert float(quantile(builtin_law("rademacher"), 0.5)) == -1.0  # left-continuous inverse
    assert float(quantile(builtin_law("zero-atom(1/2)"), 0.5)) == 0.0
    assert float(quantile(builtin_law("zero-atom(1/2)"), 0.25)) < 0
    assert float(quantile(builtin_law("zero-atom(1/2)"), 0.75)) == 0.0
    with pytest.raises(ValueError):
        quantile(builtin_law("gaussian"), 0.0)
    with pytest.raises(ValueError):
        quantile(builtin_law("rademacher"), 1.0)


def test_gaussian_quantile_accuracy():
    from scipy.stats import norm
    us = np.linspace(1e-6, 1 - 1e-6, 1001)
    assert np.allclose(quantile(builtin_law("gaussian"), us), norm.ppf(us), rtol=1e-14, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(BUILTINS), st.floats(1e-9, 1 - 1e-9), st.floats(1e-9, 1 - 1e-9))
def test_quantile_monotone_and_in_support(name, u, v):
    law = builtin_law(name)
    a, b = sorted((u, v))
    qa, qb = float(quantile(law, a)), float(quantile(law, b))
    assert qa <= qb
    if law.is_discrete:
        assert qa in law.support and qb in law.support


def test_sample_support():
    s = CouplingStream(7)
    for name in ["rademacher", "four-moment"]:
        law = builtin_law(name)
        x = sample(law, s, 5000)
        assert set(np.unique(x)) <= set(law.support)


def test_gaussian_mean():
    x = sample(builtin_law("gaussian"), CouplingStream(3), 10 ** 6)
    assert abs(x.mean()) < 4 / math.sqrt(1e6)


@pytest.mark.parametrize("name", ["four-moment", "ternary(1/3)", "zero-atom(0.9)"])
def test_atom_frequencies(name):
    law = builtin_law(name)
    N = 10 ** 5
    x = sample(law, CouplingStream(11), N)
    for v, m in law.atoms:
        p = float(m)
        freq = np.mean(x == v)
        assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / N)


def test_coupling_replay():
    s = CouplingStream(99)
    laws = [builtin_law("gaussian"), builtin_law("rademacher"), builtin_law("four-moment")]
    u = s.uniforms(5, 300)
    for law in laws:
        assert np.array_equal(sample(law, s, 300, trial=5), quantile(law, u))
    mixed = sample_sequence(laws, s, 300, trial=5)
    for j, law in enumerate(laws):
        assert np.array_equal(mixed[j::3], quantile(law, u[j::3]))


def test_stream_prefix_and_offsets():
    s = CouplingStream(1)
    a = s.uniforms(2, 100)
    b = s.uniforms(2, 37, start=63)
    assert np.array_equal(a[63:], b)
    assert np.array_equal(s.uniforms(2, 10), CouplingStream(1).uniforms(2, 10))
    assert not np.array_equal(s.uniforms(2, 10), s.uniforms(3, 10))
    assert np.all((a > 0) & (a < 1))


def test_gaussian_discretization_converges():
    prev = math.inf
    for m in (4, 16, 64, 256):
        law = gaussian_discretization(m)
        validate_moments(law)
        m4 = float(moment(law, 4))
        assert abs(m4 - 3) < prev
        prev = abs(m4 - 3)


def test_ternary_path():
    law = ternary_path_law("1/3", 4)
    assert law.zero_mass == Fraction(1, 3) + Fraction(2, 3) / 8
    validate_moments(law)
    assert ternary_path_law("1/3", 10 ** 6).zero_mass - Fraction(1, 3) < Fraction(1, 10 ** 6)
