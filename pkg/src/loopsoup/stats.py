"""Thin wrappers over scipy's goodness-of-fit tests with a uniform return shape."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import stats


class TestResult(NamedTuple):
    statistic: float
    pvalue: float


def two_sample_ks(a, b) -> TestResult:
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    r = stats.ks_2samp(a, b)
    return TestResult(float(r.statistic), float(r.pvalue))


def one_sample_ks(x, cdf) -> TestResult:
    r = stats.kstest(np.asarray(x, float), cdf)
    return TestResult(float(r.statistic), float(r.pvalue))


def chi_square(observed, expected, ddof: int = 0, min_expected: float = 5.0) -> TestResult:
    """Pearson chi-square; adjacent cells are pooled until each expects ``min_expected``.

    ``expected`` is rescaled to the observed total, so it may be given as
    probabilities.
    """
    obs = np.asarray(observed, float)
    exp = np.asarray(expected, float)
    if obs.shape != exp.shape or obs.ndim != 1:
        raise ValueError("observed and expected must be 1-d of equal length")
    exp = exp * (obs.sum() / exp.sum())
    o_cells, e_cells = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            o_cells.append(o_acc)
            e_cells.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if e_cells:
            o_cells[-1] += o_acc
            e_cells[-1] += e_acc
        else:
            o_cells.append(o_acc)
            e_cells.append(e_acc)
    o_arr, e_arr = np.array(o_cells), np.array(e_cells)
    if o_arr.size < 2:
        return TestResult(0.0, 1.0)
    stat = float(np.sum((o_arr - e_arr) ** 2 / e_arr))
    df = o_arr.size - 1 - ddof
    return TestResult(stat, float(stats.chi2.sf(stat, df)) if df > 0 else 1.0)


def anderson_normal(x) -> TestResult:
    """Anderson-Darling test of normality with estimated mean and variance.

    The p-value uses the Stephens (1986) approximation for the case of
    estimated parameters.
    """
    x = np.asarray(x, float)
    a2 = float(stats.anderson(x, dist="norm").statistic)
    n = x.size
    z = a2 * (1.0 + 0.75 / n + 2.25 / n**2)
    if z >= 0.6:
        p = np.exp(1.2937 - 5.709 * z + 0.0186 * z**2)
    elif z >= 0.34:
        p = np.exp(0.9177 - 4.279 * z - 1.38 * z**2)
    elif z >= 0.2:
        p = 1.0 - np.exp(-8.318 + 42.796 * z - 59.938 * z**2)
    else:
        p = 1.0 - np.exp(-13.436 + 101.14 * z - 223.73 * z**2)
    return TestResult(a2, float(min(max(p, 0.0), 1.0)))


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, float)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def ratio_se(k1: float, n1: int, k2: float, n2: int) -> tuple[float, float]:
    """Ratio of two binomial frequencies and its delta-method standard error."""
    p1, p2 = k1 / n1, k2 / n2
    r = p1 / p2
    rel = np.sqrt((1 - p1) / (n1 * p1) + (1 - p2) / (n2 * p2))
    return float(r), float(r * rel)
