import numpy as np
import pytest
from hypothesis import settings

from lattice_scattering.geometry import SpectralParam
from lattice_scattering.green import green_table
from lattice_scattering.lattice import build_domain
from lattice_scattering.scattering import Potential, angular_grid

# fixed example generation so that runs are reproducible
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")

_CRITERIA = []


def record_criterion(label, ok, detail=""):
    """Register one acceptance line; printed in the terminal summary."""
    _CRITERIA.append((label, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")


@pytest.fixture(scope="session")
def ref_param():
    return SpectralParam(0.3, 2, 1)


@pytest.fixture(scope="session")
def ref_table(ref_param):
    return green_table(ref_param, 12)


@pytest.fixture(scope="session")
def ref_domain():
    return build_domain(2, 2)


@pytest.fixture(scope="session")
def ref_potential(ref_domain):
    return Potential.random(ref_domain, 42)


@pytest.fixture(scope="session")
def ref_grid():
    return angular_grid(0.3, 2, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
