"""Shared fixtures; the acceptance suite reports one summary line per criterion."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a one-line acceptance summary (printed at the end of the session)."""

    def _add(criterion, text):
        ACCEPTANCE_LINES.append(f"[criterion {criterion}] {text}")

    return _add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
