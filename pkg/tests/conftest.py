import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tailcausal.tail import TailSample

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_sample(z, proxy=None, u=10.0):
    """TailSample straight from a log-tail matrix (rows must have a positive entry)."""
    z = np.asarray(z, dtype=float)
    proxy = None if proxy is None else np.asarray(proxy, dtype=float)
    return TailSample(z, u, np.arange(z.shape[0]), proxy)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
