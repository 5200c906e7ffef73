"""Collects the acceptance-bar lines and prints them after the run.

pytest captures file descriptors, so the bar results would otherwise only
show up for failing tests; a terminal-summary section keeps the full
PASS/FAIL list visible on every run.
"""

import pytest

_ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_line():
    """Append-callback for one PASS/FAIL summary line."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance bars")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.line(line)
