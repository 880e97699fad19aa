import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from loopsoup import stats
from loopsoup.rng import replica_rng


def test_identical_samples_give_zero_statistic():
    x = replica_rng(0).standard_normal(500)
    assert stats.two_sample_ks(x, x.copy()).statistic == 0.0


def test_shifted_normals_are_rejected():
    rng = replica_rng(1)
    r = stats.two_sample_ks(rng.standard_normal(10_000), rng.standard_normal(10_000) + 1.0)
    assert r.pvalue < 1e-3


def test_chi_square_perfect_fit():
    obs = np.array([10.0, 20.0, 30.0])
    assert stats.chi_square(obs, obs).statistic == 0.0


def test_chi_square_matches_scipy_without_pooling():
    obs = np.array([18.0, 25.0, 31.0, 26.0])
    exp = np.array([0.25, 0.25, 0.25, 0.25])
    ref = sps.chisquare(obs, exp * obs.sum())
    r = stats.chi_square(obs, exp)
    assert r.statistic == pytest.approx(ref.statistic)
    assert r.pvalue == pytest.approx(ref.pvalue)


def test_chi_square_pools_sparse_cells():
    obs = np.array([50.0, 30.0, 2.0, 1.0, 0.0])
    exp = np.array([50.0, 30.0, 2.0, 1.0, 1.0])
    r = stats.chi_square(obs, exp)
    assert np.isfinite(r.statistic) and 0 <= r.pvalue <= 1


@given(st.lists(st.floats(0, 100), min_size=2, max_size=20))
def test_chi_square_pvalue_in_range(obs):
    obs = np.array(obs) + 1.0
    r = stats.chi_square(obs, np.ones_like(obs))
    assert 0.0 <= r.pvalue <= 1.0 and r.statistic >= 0


def test_anderson_normal():
    rng = replica_rng(2)
    assert stats.anderson_normal(rng.standard_normal(5000)).pvalue > 1e-3
    assert stats.anderson_normal(rng.exponential(size=5000)).pvalue < 1e-3


def test_ratio_se_delta_method():
    r, se = stats.ratio_se(450, 10_000, 440, 10_000)
    assert r == pytest.approx(45 / 44)
    assert se == pytest.approx(r * np.sqrt((1 - 0.045) / 450 + (1 - 0.044) / 440))


def test_mean_and_se():
    m, se = stats.mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
