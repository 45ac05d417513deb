import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def lorentz():
    from odcm.spectra import lorentzian_correlation
    return lorentzian_correlation(1.0, 1.0)


@pytest.fixture(scope="session")
def grid10():
    from odcm.control import TimeGrid
    return TimeGrid(10.0, 1025)


def closed_form_unmodulated(gamma, t_c, T):
    """``(2 gamma / T)(T - t_c (1 - exp(-T / t_c)))``."""
    return 2.0 * gamma / T * (T - t_c * (1.0 - np.exp(-T / t_c)))


ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(log):
        ok, detail = log[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
