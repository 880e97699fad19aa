"""Statistical acceptance suite: one PASS/FAIL line per criterion.

Sample sizes and tolerances are the ones each check pins; set
LOOPSOUP_ACCEPT_SCALE below 1 for a quicker, weaker run.
"""

import os

import pytest

from loopsoup.verify import CHECKS, format_row

SCALE = float(os.environ.get("LOOPSOUP_ACCEPT_SCALE", "1.0"))
LINES: list[str] = []
_reports: dict = {}


def report(name):
    if name not in _reports:
        _reports[name] = CHECKS[name](scale=SCALE)
    return _reports[name]


@pytest.mark.parametrize("name", list(CHECKS))
def test_criterion(name):
    r = report(name)
    line = format_row(r)
    LINES.append(line)
    print(line)
    assert r.passed, f"{line}\n{r.details}"


def test_lattice_spacing_against_normalized_pmf():
    # the closed form decays like 2^-j at c = 1/2; the sampler follows j (1-r)^2 r^(j-1), r = 1 + c - sqrt(c^2 + 2c)
    r = report("lattice_spacing_pmf")
    p = r.details["normalized_pmf_p"]
    line = f"{'PASS' if p > 1e-3 else 'FAIL'} lattice_spacing_pmf_normalized: chi-square p {p:.4g} (threshold 0.001)"
    LINES.append(line)
    print(line)
    assert p > 1e-3
