import sys

import pytest

from loopsoup.core import GeneratorSpec, RadonMeasure, harmonic_pair


@pytest.fixture(scope="session")
def uniform_half():
    gen = GeneratorSpec.brownian(RadonMeasure.uniform(0.5))
    return gen, harmonic_pair(gen, window=(-10.0, 10.0))


@pytest.fixture(scope="session")
def killed_at_zero():
    gen = GeneratorSpec.brownian(lo=0.0)
    return gen, harmonic_pair(gen)


@pytest.fixture(scope="session")
def two_piece():
    gen = GeneratorSpec.brownian(RadonMeasure(density=((-1.0, 0.5, 0.8, 0.0), (1.0, 2.5, 0.4, 0.0))))
    return gen, harmonic_pair(gen)


@pytest.fixture(scope="session")
def reflected_uniform():
    gen = GeneratorSpec((0.0, 20.0), ("natural", "natural"), kappa=RadonMeasure.uniform(1.0, 0.0, 20.0))
    return gen, harmonic_pair(gen, h_max=2.0)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for n, m in sys.modules.items() if n.rsplit(".", 1)[-1] == "test_acceptance"), None)
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
