import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from nswatermark.barcode_set import build_set  # noqa: E402
from nswatermark.barcodes import CodeParams  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance results, printed once at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[crit]
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def l24_build():
    """The l=24, M=256 set used across tests (seed 7, short watermark search)."""
    return build_set(CodeParams(16, 2, 6, 4, 7, 7), search_seed=7, budget=1)


@pytest.fixture(scope="session")
def l24_set(l24_build):
    return l24_build.barcode_set


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
