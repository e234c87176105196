import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kpzlab.grid import RngKey, ensemble_from_array, make_grid, sample_line_ensemble

settings.register_profile("kpzlab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("kpzlab")


@pytest.fixture
def two_line():
    """Points {0,1,2}; bottom line (line 2) cumulative (0,3,1), top line (0,1,5)."""
    return ensemble_from_array(make_grid(0.0, 1.0, 3), [[0.0, 1.0, 5.0], [0.0, 3.0, 1.0]])


@pytest.fixture
def small_ensemble():
    return sample_line_ensemble(make_grid(0.0, 0.05, 40), 6, RngKey(11))


def random_ensemble(seed: int, k: int, count: int):
    rng = np.random.default_rng(seed)
    lines = np.cumsum(rng.standard_normal((k, count)), axis=1)
    lines[:, 0] = 0.0
    return ensemble_from_array(make_grid(0.0, 1.0, count), lines)


# acceptance verdicts, filled by test_acceptance.py and echoed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
