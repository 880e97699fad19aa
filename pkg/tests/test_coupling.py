import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from loopsoup.core import GeneratorSpec, RadonMeasure, harmonic_pair
from loopsoup.coupling import (CouplingPath, conditional_restrict, couple_atom, couple_path, couple_small,
                               insert_point, prob_no_cut_in, strengthen_proportional, v_weight,
                               v_weight_proportional)
from loopsoup.dpp import PointConfig, chain_sample
from loopsoup.rng import replica_rng
from loopsoup.verify import four_atom_exact_ratio


def contained(small, big):
    return bool(np.all(np.isin(small, big)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.floats(-0.99, 2.49))
def test_insert_point_containments(two_piece, seed, y0):
    gen, hs = two_piece
    rng = replica_rng(seed)
    cfg = chain_sample(gen, hs, rng)
    if np.any(cfg.Z == y0):
        return
    out = insert_point(cfg, hs, y0, rng).check()
    assert y0 in out.Y
    assert contained(cfg.Z, out.Z)
    # at most one old root is moved, and it is replaced by y0
    assert len(set(cfg.Y) - set(out.Y)) <= 1
    assert out.Y.size - cfg.Y.size in (0, 1)


def test_insert_point_edge_cases(two_piece):
    _, hs = two_piece
    empty = insert_point(PointConfig(), hs, 0.3, replica_rng(0))
    assert empty.Y.tolist() == [0.3]
    cfg = PointConfig(np.array([0.0, 2.0]), np.array([1.2]))
    assert insert_point(cfg, hs, 2.0, replica_rng(0)).Y.tolist() == [0.0, 2.0]
    with pytest.raises(ValueError):
        insert_point(cfg, hs, 1.2, replica_rng(0))


def test_insert_point_degenerate_replacement(two_piece):
    # u_up is constant left of the killing support, so the root moves with probability one
    _, hs = two_piece
    assert hs.u_up(-1.5) == hs.u_up(-1.2)
    cfg = PointConfig(np.array([-1.5]), np.zeros(0))
    for r in range(20):
        assert insert_point(cfg, hs, -1.2, replica_rng(r)).Y.tolist() == [-1.2]


@pytest.mark.parametrize("y0,c", [(0.2, 1.0), (0.8, 0.3), (1.7, 2.0)])
def test_atom_probability_is_perturbed_green(two_piece, y0, c):
    # cG/(1 + cG) computed from the weak pair equals c G~ from the strong pair
    gen, hs = two_piece
    hs_t = harmonic_pair(gen.with_kappa(gen.kappa + RadonMeasure.dirac(y0, c)))
    g = hs.green(y0, y0)
    assert c * g / (1 + c * g) == pytest.approx(c * hs_t.green(y0, y0), rel=1e-9)


def test_couple_atom_matches_direct_sampler(two_piece):
    gen, hs = two_piece
    y0, c = 0.2, 1.0
    gen_t = gen.with_kappa(gen.kappa + RadonMeasure.dirac(y0, c))
    hs_t = harmonic_pair(gen_t)
    n = 3000
    coupled = [couple_atom(chain_sample(gen, hs, replica_rng(1, r)), gen, c, y0, replica_rng(2, r), hs=hs)
               for r in range(n)]
    direct = [chain_sample(gen_t, hs_t, replica_rng(3, r)) for r in range(n)]
    hits = sum(y0 in cfg.Y for cfg in coupled)
    p = c * hs_t.green(y0, y0)
    assert abs(hits / n - p) < 4 * math.sqrt(p * (1 - p) / n)
    for f in (lambda k: k.Y.size, lambda k: k.Y.min(), lambda k: k.Z.max() if k.Z.size else 0.0):
        assert stats.ks_2samp([f(k) for k in coupled], [f(k) for k in direct]).pvalue > 1e-3


def test_couple_atom_zero_mass_is_identity(two_piece):
    gen, hs = two_piece
    cfg = chain_sample(gen, hs, replica_rng(0))
    out = couple_atom(cfg, gen, 0.0, 0.3, replica_rng(1), hs=hs)
    assert np.array_equal(out.Y, cfg.Y) and np.array_equal(out.Z, cfg.Z)
    with pytest.raises(ValueError):
        couple_atom(cfg, gen, -1.0, 0.3)


@pytest.mark.parametrize("y", [-2.0, -0.5, 0.7, 1.5, 3.0])
def test_v_weight_two_routes(two_piece, y):
    gen, hs = two_piece
    inc = RadonMeasure(density=((0.6, 0.9, 0.2, 0.0),))
    hs_t = harmonic_pair(gen.with_kappa(gen.kappa + inc))
    a, b = v_weight(hs, hs_t, y), v_weight_proportional(hs, hs_t, y)
    assert abs(a - b) <= 1e-6 * abs(b)


def test_couple_small_adds_at_most_one_root(two_piece):
    gen, hs = two_piece
    kt = gen.kappa + RadonMeasure(density=((0.6, 0.9, 0.05, 0.0),))
    for r in range(30):
        cfg = chain_sample(gen, hs, replica_rng(r))
        out = couple_small(cfg, gen, kt, replica_rng(100 + r), hs=hs).check()
        assert out.Y.size - cfg.Y.size in (0, 1) and contained(cfg.Z, out.Z)


def test_prob_no_cut_in(two_piece):
    gen, hs = two_piece
    assert prob_no_cut_in(hs, 0.3, 0.3) == pytest.approx(1.0, abs=1e-12)
    vals = [prob_no_cut_in(hs, 0.0, b) for b in (0.2, 0.6, 1.2, 2.0)]
    assert all(x >= y for x, y in zip(vals, vals[1:]))
    # Monte Carlo check on one interval
    n = 4000
    hits = sum(not np.any((c.Z >= 0.0) & (c.Z <= 1.2))
               for c in (chain_sample(gen, hs, replica_rng(7, r)) for r in range(n)))
    p = prob_no_cut_in(hs, 0.0, 1.2)
    assert abs(hits / n - p) < 4 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("kind,a,b", [("root", 0.2, None), ("cut", 0.7, None), ("no_cut", 0.0, 1.2),
                                      ("no_root", -0.5, 0.3)])
def test_conditional_samplers_obey_their_event(two_piece, kind, a, b):
    gen, hs = two_piece
    sampler = conditional_restrict(gen, kind, a, b, hs=hs if kind != "no_root" else None)
    for r in range(40):
        cfg = sampler.sample(replica_rng(r)).check()
        if kind == "root":
            assert a in cfg.Y
        elif kind == "cut":
            assert a in cfg.Z
        elif kind == "no_cut":
            assert not np.any((cfg.Z >= a) & (cfg.Z <= b))
        else:
            assert not np.any((cfg.Y >= a) & (cfg.Y <= b))


def test_no_cut_sampler_matches_rejection(two_piece):
    gen, hs = two_piece
    a, b = 0.0, 1.2
    sampler = conditional_restrict(gen, "no_cut", a, b, hs=hs)
    direct = [sampler.sample(replica_rng(1, r)) for r in range(2000)]
    rejected = []
    r = 0
    while len(rejected) < 2000:
        c = chain_sample(gen, hs, replica_rng(2, r))
        r += 1
        if not np.any((c.Z >= a) & (c.Z <= b)):
            rejected.append(c)
    for f in (lambda k: k.Y.size, lambda k: k.Y.min(), lambda k: k.Y.max()):
        assert stats.ks_2samp([f(k) for k in direct], [f(k) for k in rejected]).pvalue > 1e-3


def test_conditional_restrict_validates(two_piece):
    gen, hs = two_piece
    with pytest.raises(ValueError):
        conditional_restrict(gen, "bogus", 0.0)
    with pytest.raises(ValueError):
        conditional_restrict(gen, "no_cut", 1.0, 0.5)


def test_coupling_path_validation():
    k = RadonMeasure.dirac(0.0)
    with pytest.raises(ValueError):
        CouplingPath(k, [(RadonMeasure.dirac(1.0), 0.6, 0.4)])
    path = CouplingPath(k, [(RadonMeasure.dirac(1.0), 0.0, 0.5), (RadonMeasure.dirac(2.0), 0.5, 1.0)])
    assert path.kappa_at(0.25) == k + RadonMeasure.dirac(1.0, 0.5)
    assert path.target == k + RadonMeasure.dirac(1.0) + RadonMeasure.dirac(2.0)


def test_couple_path_identity(two_piece):
    gen, hs = two_piece
    cfg = chain_sample(gen, hs, replica_rng(0))
    out = couple_path(cfg, gen, CouplingPath(gen.kappa, []), replica_rng(1))
    assert np.array_equal(out.Y, cfg.Y) and np.array_equal(out.Z, cfg.Z)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32))
def test_couple_path_containment(reflected_uniform, seed):
    gen, hs = reflected_uniform
    path = CouplingPath.straight(gen.kappa, RadonMeasure.uniform(2.0, 0.0, 20.0))
    cfg = chain_sample(gen, hs, replica_rng(seed))
    out = couple_path(cfg, gen, path, replica_rng(seed, 1), h_max=2.0).check()
    assert contained(cfg.Z, out.Z)


def test_strengthen_proportional_nests_roots(two_piece):
    gen, hs = two_piece
    c = 2.0
    path = CouplingPath.straight(gen.kappa, gen.kappa.scale(c))
    for r in range(20):
        cfg = chain_sample(gen, hs, replica_rng(r))
        cfg_t = couple_path(cfg, gen, path, replica_rng(r, 1))
        weak, strong = strengthen_proportional((cfg, cfg_t), gen, c, replica_rng(r, 2))
        weak.check()
        strong.check()
        assert contained(weak.Y, strong.Y) and contained(weak.Z, strong.Z)
    with pytest.raises(ValueError):
        strengthen_proportional((cfg, cfg_t), gen, 0.5)


def test_four_atom_ratio_exact():
    assert four_atom_exact_ratio() == pytest.approx(45 / 44, rel=1e-12)
