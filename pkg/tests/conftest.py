from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dsgkit.reference import reference_instance

settings.register_profile("dsgkit", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dsgkit")


@pytest.fixture(scope="session")
def ref():
    return reference_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for k, m in sys.modules.items() if k.split(".")[-1] == "test_acceptance"), None)
    RESULTS = getattr(mod, "RESULTS", None)
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, (ok, detail) in RESULTS.items():
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
