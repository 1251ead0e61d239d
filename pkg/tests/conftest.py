import numpy as np
import pytest

from jumpfold.families import CehFamily, FlatFamily, ProjFamily, tau_invariant_point


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ceh():
    return CehFamily()


@pytest.fixture(scope="session")
def proj():
    return ProjFamily()


@pytest.fixture(scope="session")
def flat():
    return FlatFamily(2)


@pytest.fixture(scope="session")
def ceh_fold(ceh):
    return tau_invariant_point(ceh, 1, 0.09)


@pytest.fixture(scope="session")
def proj_jump(proj):
    return proj.make_point([0.3, 0.2 - 0.1j, 1.1, 0])


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
