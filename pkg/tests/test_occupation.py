import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from loopsoup.core import GeneratorSpec, RadonMeasure, SignedMeasure, harmonic_pair
from loopsoup.occupation import (besq_step, clusters, euler_field, exp_moment, exp_moment_routes,
                                 laplace_det, laplace_direct, permanental_moment, sample_field, sample_gff)
from loopsoup.rng import replica_rng


def alpha_permanent(M, alpha):
    # brute-force oracle: sum over permutations of alpha^(cycles) prod M[i, s(i)]
    n = M.shape[0]
    total = 0.0
    for perm in itertools.permutations(range(n)):
        seen, cyc = set(), 0
        for i in range(n):
            if i not in seen:
                cyc += 1
                j = i
                while j not in seen:
                    seen.add(j)
                    j = perm[j]
        total += alpha ** cyc * np.prod([M[i, perm[i]] for i in range(n)])
    return total


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("pts", [[1.0], [0.7, 1.6], [0.5, 1.0, 1.8], [0.2, 0.9, 1.3, 3.0]])
def test_permanental_moment_matches_brute_force(killed_at_zero, alpha, pts):
    _, hs = killed_at_zero
    G = 2.0 * np.minimum.outer(np.array(pts), np.array(pts))
    assert permanental_moment(hs, pts, alpha) == pytest.approx(alpha_permanent(G, alpha), rel=1e-10)


def test_permanent_frozen_values(killed_at_zero):
    _, hs = killed_at_zero
    assert permanental_moment(hs, [0.7, 1.6], 0.5) == pytest.approx(2.1, rel=1e-12)
    assert permanental_moment(hs, [0.5, 1.0, 1.8], 1.0) == pytest.approx(20.8, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0), st.floats(0.2, 2.0))
def test_laplace_two_routes_agree(killed_at_zero, l1, l2, alpha):
    gen, hs = killed_at_zero
    a = laplace_det(hs, gen, [1.0, 2.5], [l1, l2], alpha)
    b = laplace_direct(hs, [1.0, 2.5], [l1, l2], alpha)
    assert a == pytest.approx(b, rel=1e-9)
    assert 0 < a < 1


def test_laplace_one_point_is_gamma(killed_at_zero):
    gen, hs = killed_at_zero
    # gamma(alpha, scale 2x) Laplace transform (1 + 2 x lambda)^-alpha
    assert laplace_det(hs, gen, [1.5], [0.4], 0.7) == pytest.approx((1 + 3.0 * 0.4) ** -0.7, rel=1e-10)


def test_besq_step_moments():
    rng = replica_rng(11)
    q0, h, alpha = 1.3, 0.8, 0.75
    q = besq_step(np.full(200_000, q0), h, alpha, rng)
    # BESQ(d): mean q0 + d h, variance 4 q0 h + 2 d h^2 with d = 2 alpha
    d = 2 * alpha
    assert q.mean() == pytest.approx(q0 + d * h, abs=4 * math.sqrt((4 * q0 * h + 2 * d * h * h) / q.size))
    assert q.var() == pytest.approx(4 * q0 * h + 2 * d * h * h, rel=0.03)


def test_field_vanishes_at_killed_end(killed_at_zero):
    gen, hs = killed_at_zero
    fld = sample_field(gen, hs, 1.0, [0.0, 0.5, 1.0], replica_rng(2), size=50)
    assert np.all(fld.values[:, 0] == 0) and np.all(fld.values[:, 1:] > 0)


def test_field_rejects_bad_grid(killed_at_zero):
    gen, hs = killed_at_zero
    with pytest.raises(ValueError):
        sample_field(gen, hs, 1.0, [1.0, 0.5], replica_rng(0))
    with pytest.raises(ValueError):
        sample_field(gen, hs, 1.0, [-1.0, 0.5], replica_rng(0))
    with pytest.raises(ValueError):
        sample_field(gen, hs, 0.0, [0.5], replica_rng(0))


def test_field_against_euler_scheme():
    # an independent route through the branching SDE in the space variable
    gen = GeneratorSpec.brownian(RadonMeasure.uniform(0.5, 0.0, 3.0), lo=0.0, hi=3.0)
    hs = harmonic_pair(gen)
    grid = [0.0, 0.5, 1.0, 1.5]
    exact = sample_field(gen, hs, 1.0, grid, replica_rng(3), size=4000, track_zeros=False).values[:, -1]
    approx = euler_field(gen, hs, 1.0, grid, replica_rng(4), size=4000, substeps=100)[:, -1]
    assert stats.ks_2samp(exact, approx).pvalue > 1e-3
    assert exact.mean() == pytest.approx(hs.green(1.5, 1.5), rel=0.05)


def test_clusters_on_hand_built_field():
    from loopsoup.occupation import OccupationField
    x = np.arange(6.0)
    fld = OccupationField(x, np.array([0.0, 1.0, 2.0, 0.0, 3.0, 4.0]), 0.5,
                          zero_between=np.array([False, False, False, False, True]))
    assert clusters(fld) == [(0.0, 3.0), (3.0, 4.0), (5.0, 5.0)]


def test_gff_covariance(killed_at_zero):
    gen, hs = killed_at_zero
    phi = sample_gff(gen, hs, [1.0, 2.0], replica_rng(5), size=100_000).values
    cov = np.cov(phi.T)
    assert cov[0, 1] == pytest.approx(2.0, rel=0.03)
    assert cov[1, 1] == pytest.approx(4.0, rel=0.03)


def test_exp_moment_routes_agree_and_diverge():
    gen = GeneratorSpec.brownian(RadonMeasure.dirac(-1.0) + RadonMeasure.dirac(1.0))
    hs = harmonic_pair(gen)
    r = exp_moment_routes(gen, hs, SignedMeasure.of(atoms=[(0.0, 0.05)]), 1.0)
    assert r.trace == pytest.approx(r.fredholm, rel=1e-6)
    assert r.trace == pytest.approx(r.fredholm_direct, rel=1e-6)
    # a single atom gives (1 - eps G(0, 0))^-alpha
    g00 = hs.green(0.0, 0.0)
    assert r.value == pytest.approx(1 / (1 - 0.05 * g00), rel=1e-6)
    assert math.isinf(exp_moment(gen, hs, SignedMeasure.of(atoms=[(0.0, 5.0)]), 1.0))
    assert exp_moment(gen, hs, SignedMeasure.of(), 1.0) == 1.0
