import os

import hypothesis
import numpy as np
import pytest

from conelab import geometry as geo

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=400, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> list of (label, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def euclid():
    return geo.euclidean(2)


@pytest.fixture(scope="session")
def lq4():
    return geo.lq_gauge(4, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[num]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{label}: {'ok' if p else 'FAILED'} ({d})" for label, p, d in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}  {detail}")
