import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Log one acceptance line; returns ``passed`` so tests can assert on it."""
    def _record(criterion, label, value, tol, passed, relation="<"):
        line = (f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {label}: "
                f"{value:.3e} {relation} {tol:.1e}")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
