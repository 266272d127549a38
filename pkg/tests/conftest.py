import numpy as np
import pytest

from rigidity.linalg import ProbeSet, SpectralUnitary

GOLDEN = (np.sqrt(5) - 1) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spectral(rng, dim):
    w = rng.random(dim) + 0.1
    return SpectralUnitary(rng.uniform(0, 2 * np.pi, dim), w / w.sum())


def geometric(L):
    return 1 - 2.0**-L


@pytest.fixture
def unit_probes():
    return ProbeSet.basis(8)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
