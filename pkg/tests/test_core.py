import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from loopsoup.core import (ConfigError, GeneratorClass, GeneratorSpec, MeasureError, RadonMeasure,
                           SignedMeasure, classify, harmonic_pair)


def test_uniform_killing_closed_form(uniform_half):
    # BM with killing 1/2: u_down is a multiple of exp(-x) and G(x, x) = 1/sqrt(2c) = 1
    _, hs = uniform_half
    x = np.linspace(-10, 10, 81)
    ud = hs.down.values(x)[0]
    beta = ud[40] / math.exp(-x[40])
    assert np.max(np.abs(ud / (beta * np.exp(-x)) - 1)) < 1e-8
    assert np.max(np.abs(hs.green_diag(x) - 1.0)) < 1e-8


def test_killed_at_zero_green_is_twice_min(killed_at_zero):
    _, hs = killed_at_zero
    for x, y in [(0.3, 2.0), (1.0, 1.0), (5.0, 0.1)]:
        assert hs.green(x, y) == pytest.approx(2 * min(x, y), rel=1e-10)


@pytest.mark.parametrize("fixture", ["uniform_half", "two_piece", "killed_at_zero"])
def test_flux_wronskian_is_one(fixture, request):
    _, hs = request.getfixturevalue(fixture)
    for t in [0.25, 0.75, 1.7, 3.0]:
        uu, pu, ud, pd = hs.pair_state(t)
        assert ud * pu - uu * pd == pytest.approx(1.0, rel=1e-9)
        # in derivative units the Wronskian is the scale density
        assert hs.wronskian(t) == pytest.approx(2.0, rel=1e-9)


def test_harmonic_pair_monotone(two_piece):
    _, hs = two_piece
    x = np.linspace(-4, 6, 200)
    assert np.all(np.diff(hs.up.values(x)[0]) >= 0)
    assert np.all(np.diff(hs.down.values(x)[0]) <= 0)


def test_green_solves_resolvent_equation(two_piece):
    # G(x, .) integrated against kappa plus the escape mass at the natural ends equals 1 in total:
    # for BM started at x, P(killed) = integral of G(x, y) kappa(dy) when both ends are natural and recurrent.
    gen, hs = two_piece
    x = 0.7
    f = lambda y: hs.green(x, y)
    mass = sum(integrate.quad(f, lo, hi, limit=200, points=[x] if lo < x < hi else None)[0] * c
               for lo, hi, c, _ in gen.kappa.density)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_from_config_roundtrip():
    gen = GeneratorSpec.brownian(RadonMeasure(atoms=((0.5, 1.0),), density=((-1.0, 2.0, 0.3, 0.0),)))
    again = GeneratorSpec.from_config(gen.to_config())
    assert again.kappa == gen.kappa
    assert again.interval == gen.interval
    killed = GeneratorSpec.brownian(RadonMeasure.uniform(0.3, 0.0, 4.0), lo=0.0, hi=4.0, boundary=("killing", "natural"))
    assert GeneratorSpec.from_config(killed.to_config()) == killed


@pytest.mark.parametrize("doc", [
    {"interval": [1, 0]},
    {"kappa": {"atoms": [[0, -1]]}},
    {"kappa": {"density": [[0, "inf", 1, 1]]}},
    {"interval": "zero"},
])
def test_bad_config_raises(doc):
    with pytest.raises(ConfigError):
        GeneratorSpec.from_config(doc)


def test_classify_dichotomy():
    gen = GeneratorSpec.brownian(RadonMeasure.dirac(-1.0) + RadonMeasure.dirac(1.0))
    assert classify(gen).kind is GeneratorClass.D_MINUS
    assert classify(gen, SignedMeasure.of(atoms=[(0.0, 0.05)])).kind is GeneratorClass.D_MINUS
    assert classify(gen, SignedMeasure.of(atoms=[(0.0, 5.0)])).kind is GeneratorClass.D_PLUS


def test_classify_critical_case():
    # u = 1 outside [-1, 1], jumps of u'/2 equal c u at the killing atoms, linear in between:
    # the even positive solution exists exactly when the creation at 0 is 2c / (1 + 2c)
    c = 1.0
    gen = GeneratorSpec.brownian(RadonMeasure.dirac(-1.0, c) + RadonMeasure.dirac(1.0, c))
    crit = 2 * c / (1 + 2 * c)
    assert classify(gen, SignedMeasure.of(atoms=[(0.0, crit * 0.9)])).kind is GeneratorClass.D_MINUS
    assert classify(gen, SignedMeasure.of(atoms=[(0.0, crit * 1.1)])).kind is GeneratorClass.D_PLUS
    assert classify(gen, SignedMeasure.of(atoms=[(0.0, crit)])).kind is GeneratorClass.D_ZERO


atoms = st.lists(st.tuples(st.floats(-5, 5), st.floats(0, 3)), max_size=6)


@given(atoms, atoms)
def test_measure_mass_additive(a1, a2):
    m1, m2 = RadonMeasure(atoms=tuple(a1)), RadonMeasure(atoms=tuple(a2))
    assert (m1 + m2).total_mass() == pytest.approx(m1.total_mass() + m2.total_mass(), rel=1e-12, abs=1e-12)


@given(atoms, st.floats(-6, 6), st.floats(0, 6))
def test_measure_restrict_plus_exclude(a, lo, width):
    m = RadonMeasure(atoms=tuple(a), density=((-2.0, 3.0, 0.5, 0.1),))
    hi = lo + width
    total = m.restrict(lo, hi).total_mass() + m.exclude(lo, hi).total_mass()
    assert total == pytest.approx(m.total_mass(), rel=1e-10, abs=1e-12)


def test_measure_rejects_negative_density():
    with pytest.raises(MeasureError):
        RadonMeasure(density=((0.0, 1.0, 0.2, -1.0),))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 4.0))
def test_uniform_green_diagonal(c):
    hs = harmonic_pair(GeneratorSpec.brownian(RadonMeasure.uniform(c)), window=(-3, 3))
    assert hs.green(0.4, 0.4) == pytest.approx(1 / math.sqrt(2 * c), rel=1e-8)
    assert hs.green(-1.0, 1.5) == pytest.approx(math.exp(-2.5 * math.sqrt(2 * c)) / math.sqrt(2 * c), rel=1e-8)
