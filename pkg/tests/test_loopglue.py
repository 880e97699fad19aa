import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopsoup.core import GeneratorSpec, RadonMeasure, harmonic_pair
from loopsoup.loopglue import (brownian_bridges, brownian_excursions, extract_loops, pd01_sticks, reglue,
                               sample_xi, transform_to_generator, vervaat)
from loopsoup.rng import replica_rng


@pytest.fixture(scope="module")
def path():
    return sample_xi(1.0, 0.0, -1.0, dt=1e-3, rng=replica_rng(1), max_steps=2_000_000, truncate=True)


def test_path_ends_at_stop_level(path):
    if not path.info["truncated"]:
        assert path.running_min[-1] <= -1.0
    assert path.values[0] == 0.0
    assert np.all(np.diff(path.running_min) <= 0)


def test_loops_sit_above_their_minimum(path):
    loops = extract_loops(path)
    assert loops
    for lp in loops:
        seg = lp.values(path)
        # the closing sample is the first one at or below the record, so it may overshoot
        assert seg[:-1].min() >= lp.min - 1e-12
        assert seg[-1] <= lp.min
        assert seg.max() == lp.max
        assert lp.duration == pytest.approx((lp.end_index - lp.start_index) * path.dt)


def test_loops_have_decreasing_minima(path):
    mins = [lp.min for lp in extract_loops(path)]
    assert all(b <= a for a, b in zip(mins, mins[1:]))


def test_reglue_rebuilds_the_path(path):
    assert np.array_equal(reglue(path, extract_loops(path, min_steps=1)), path.values)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_running_minimum_speed(alpha):
    # the minimum falls at rate 1/alpha in the local time of the reflected part, so the level
    # reached is min(W) / alpha where W is the driving walk
    p = sample_xi(alpha, 0.0, -0.5, dt=1e-3, rng=replica_rng(2), max_steps=2_000_000, truncate=True)
    reflected = p.values - p.running_min
    assert reflected.min() >= 0
    assert p.running_min[-1] <= -0.5 or p.info["truncated"]


def test_sample_xi_validates():
    with pytest.raises(ValueError):
        sample_xi(0.0, 0.0, -1.0)
    with pytest.raises(ValueError):
        sample_xi(1.0, 0.0, 1.0)


def test_transform_identity_and_generator(path, killed_at_zero):
    same = transform_to_generator(path)
    assert np.array_equal(same.values, path.values)
    # killed at 0 with no killing inside: u_up/u_down = 2x and u_down = 1, so levels and clock are unchanged
    _, hs = killed_at_zero
    p = sample_xi(1.0, 2.0, 1.0, dt=1e-3, rng=replica_rng(5), max_steps=2_000_000, truncate=True)
    out = transform_to_generator(p, hs=hs)
    assert np.allclose(out.values, p.values, atol=1e-9)
    assert np.allclose(out.times, p.times, atol=1e-9)


def test_transform_keeps_order(killed_at_zero):
    gen = GeneratorSpec.brownian(RadonMeasure.uniform(0.5, 0.0, 10.0), lo=0.0)
    hs = harmonic_pair(gen)
    # the Brownian level may drop by at most half of u_up/u_down at the start
    x0 = 3.0
    drop = 0.4 * hs.u_up(x0) / hs.u_down(x0)
    p = sample_xi(1.0, x0, x0 - drop, dt=1e-6, rng=replica_rng(6), max_steps=2_000_000, truncate=True)
    out = transform_to_generator(p, hs=hs)
    order = np.argsort(p.values, kind="stable")
    assert np.all(np.diff(out.values[order]) >= -1e-12)
    assert np.all(np.diff(out.times) >= 0)


def test_vervaat_of_bridge_is_nonnegative():
    b = brownian_bridges(500, 20, replica_rng(3))
    assert np.allclose(b[:, 0], 0) and np.allclose(b[:, -1], 0)
    e = vervaat(b)
    assert np.all(e >= 0) and np.allclose(e[:, 0], 0) and np.allclose(e[:, -1], 0)
    # a cyclic shift keeps the multiset of increments
    assert np.allclose(np.sort(np.diff(e, axis=1), axis=1), np.sort(np.diff(b, axis=1), axis=1))


def test_excursion_midpoint_mean():
    # value at 1/2 of a unit excursion has mean 2 sqrt(2 / pi) * (1/2)... = sqrt(8 t (1-t) / pi) at t = 1/2
    e = brownian_excursions(200, 20_000, replica_rng(4))[:, 100]
    assert e.mean() == pytest.approx(math.sqrt(2.0 / math.pi), rel=0.02)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.0, 1e-3, 0.1]))
def test_pd_sticks_sum_to_one(seed, eps):
    s = pd01_sticks(replica_rng(seed), eps=eps)
    assert np.all(s >= 0)
    assert s.sum() == pytest.approx(1.0, abs=1e-12)
