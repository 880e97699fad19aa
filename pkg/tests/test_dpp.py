import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from loopsoup.core import GeneratorSpec, RadonMeasure, harmonic_pair
from loopsoup.dpp import (InterleavingError, PointConfig, chain_sample, count_moment_Y, count_moment_Z,
                          joint_density, leftmost_mass, prob_no_root_right_of, resample_Y_given_Z,
                          resample_Z_given_Y, wilson_sample, wilson_step)
from loopsoup.dpp.gaps import GapLaw
from loopsoup.rng import replica_rng
from loopsoup.verify import lattice_spacing_pmf, lattice_spacing_pmf_closed_form


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_chain_sample_interleaves(two_piece, seed):
    gen, hs = two_piece
    cfg = chain_sample(gen, hs, replica_rng(seed)).check()
    assert cfg.Y.size >= 1
    assert np.all((cfg.Y >= -1.0) & (cfg.Y <= 2.5))
    assert not np.any((cfg.Y > 0.5) & (cfg.Y < 1.0))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32))
def test_wilson_sample_interleaves(two_piece, seed):
    gen, hs = two_piece
    cfg = wilson_sample(gen, rng=replica_rng(seed), hs=hs, closure="exact").check()
    assert cfg.info["residual"] < cfg.info["gap_tol"]


def test_killing_ends_are_roots(killed_at_zero):
    gen = GeneratorSpec.brownian(RadonMeasure.uniform(0.3, 0.0, 4.0), lo=0.0, hi=4.0)
    hs = harmonic_pair(gen)
    for r in range(20):
        cfg = chain_sample(gen, hs, replica_rng(1, r)).check()
        assert cfg.Y[0] == 0.0 and cfg.Y[-1] == 4.0


def test_seed_determinism(two_piece):
    gen, hs = two_piece
    a = chain_sample(gen, hs, replica_rng(9, 3))
    b = chain_sample(gen, hs, replica_rng(9, 3))
    assert np.array_equal(a.Y, b.Y) and np.array_equal(a.Z, b.Z)


@pytest.mark.parametrize("fixture", ["two_piece", "reflected_uniform"])
def test_leftmost_root_law_has_mass_one(fixture, request):
    _, hs = request.getfixturevalue(fixture)
    assert leftmost_mass(hs) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.99, 2.49))
def test_gap_outcomes_sum_to_one(two_piece, x):
    _, hs = two_piece
    for a, a_abs, b, b_abs in [(-1.0, True, 2.5, True), (-math.inf, False, 2.5, True), (-1.0, True, math.inf, False)]:
        law = GapLaw(hs, a, a_abs, b, b_abs)
        assert sum(law.outcome_masses(x)) == pytest.approx(1.0, abs=1e-9)


def test_count_moment_matches_quadrature(two_piece):
    gen, hs = two_piece
    oracle = sum(c * integrate.quad(lambda x: hs.green(x, x), max(lo, 0.0), hi)[0]
                 for lo, hi, c, _ in gen.kappa.density if hi > 0)
    assert count_moment_Y([(0.0, math.inf)], hs) == pytest.approx(oracle, rel=1e-9)
    # frozen value of the same quantity
    assert oracle == pytest.approx(1.3389386773419583, rel=1e-9)


def test_cut_point_intensity_uniform(uniform_half):
    _, hs = uniform_half
    # uniform killing c gives a Poisson process of rate sqrt(2c) for roots and cuts together, half each
    assert count_moment_Z([(-2.0, 3.0)], hs) == pytest.approx(5.0 * 0.5, rel=1e-8)
    assert count_moment_Y([(-2.0, 3.0)], hs) == pytest.approx(5.0 * 0.5, rel=1e-8)


def test_second_factorial_moment_is_determinant(uniform_half):
    _, hs = uniform_half
    a, b = (0.0, 1.0), (2.0, 3.0)
    c = 0.5
    oracle = integrate.dblquad(lambda y, x: c * c * (hs.green(x, x) * hs.green(y, y) - hs.green(x, y) ** 2),
                               *a, *b)[0]
    assert count_moment_Y([a, b], hs) == pytest.approx(oracle, rel=1e-8)


def test_prob_no_root_right_of(two_piece):
    _, hs = two_piece
    assert prob_no_root_right_of(2.5, hs) == pytest.approx(1.0, abs=1e-9)
    assert prob_no_root_right_of(-1.0, hs) == pytest.approx(0.0, abs=1e-9)
    p = prob_no_root_right_of(0.7, hs)
    assert 0 < p < 1


def test_joint_density_single_root(uniform_half):
    _, hs = uniform_half
    assert joint_density([0.3], hs) == pytest.approx(1.0, rel=1e-10)
    # two roots and a cut: 2 G(y0, y1) for Brownian motion
    assert joint_density([0.0, 0.5, 1.0], hs) == pytest.approx(2 * math.exp(-1.0), rel=1e-10)
    with pytest.raises(InterleavingError):
        joint_density([0.0, 1.0], hs)


def test_resampling_keeps_the_other_half(two_piece):
    gen, hs = two_piece
    cfg = chain_sample(gen, hs, replica_rng(4))
    rz = resample_Z_given_Y(cfg, hs, replica_rng(5)).check()
    assert np.array_equal(rz.Y, cfg.Y)
    ry = resample_Y_given_Z(cfg, hs, replica_rng(6)).check()
    assert np.array_equal(ry.Z, cfg.Z)


def test_wilson_step_noop_inside_segment(two_piece):
    gen, hs = two_piece
    cfg = PointConfig(np.array([0.0]), np.zeros(0), [(-0.5, 0.3)])
    out = wilson_step(cfg, gen, hs, 0.1, replica_rng(0))
    assert out.segments == cfg.segments


def test_lattice_spacing_pmf():
    j = np.arange(1, 400)
    assert lattice_spacing_pmf(j, 0.5).sum() == pytest.approx(1.0, abs=1e-12)
    # the closed form 2cj(1+sqrt(2c))^-j has total mass 2 at c = 1/2
    assert lattice_spacing_pmf_closed_form(j, 0.5).sum() == pytest.approx(2.0, abs=1e-12)


def test_lattice_spacing_pmf_against_decay_rate():
    # u_down decays by the factor r per lattice step in the bulk, and the spacing pmf is j (1-r)^2 r^(j-1)
    c = 0.5
    hs = harmonic_pair(GeneratorSpec.brownian(RadonMeasure.lattice(c, 0, 60)))
    r = 1.0 + c - math.sqrt(c * c + 2.0 * c)
    ud = hs.down.values(np.arange(28.0, 34.0))[0]
    assert ud[1] / ud[0] == pytest.approx(r, rel=1e-8)
    pmf = lattice_spacing_pmf(np.arange(1, 5), c)
    assert pmf[1] / pmf[0] == pytest.approx(2 * r, rel=1e-12)


def test_gap_absorption_boundary_values(two_piece):
    # started next to an absorbing end, the walk is absorbed there; the absorption mass is linear
    # in the scale on a killing-free stretch
    _, hs = two_piece
    law = GapLaw(hs, 0.5, True, 1.0, True)
    assert law.outcome_masses(0.5 + 1e-12)[0] == pytest.approx(1.0, abs=1e-9)
    assert law.outcome_masses(1.0 - 1e-12)[1] == pytest.approx(1.0, abs=1e-9)
    pa, pb, kl, kr = law.outcome_masses(0.6)
    assert (pa, pb) == (pytest.approx(0.8, rel=1e-10), pytest.approx(0.2, rel=1e-10))
    assert kl == pytest.approx(0.0, abs=1e-12) and kr == pytest.approx(0.0, abs=1e-12)
