import numpy as np
import pytest
from hypothesis import settings

from cavsim import params as P
from cavsim.integrate import AVAILABLE

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(params=AVAILABLE)
def backend(request):
    return request.param


@pytest.fixture
def set1():
    return P.table_set(1)


@pytest.fixture
def set2():
    return P.table_set(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def random_density(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = z @ z.conj().T
    return r / np.trace(r).real


# acceptance criteria report one line each at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
