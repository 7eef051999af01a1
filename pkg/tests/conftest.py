"""Shared fixtures: the acceptance suite reports one line per criterion
through `acceptance_report`, and the collected lines are printed after the
run ends (terminal summary runs outside pytest's capture, so the lines
always reach the real stdout)."""

import pytest

_acceptance_lines: list = []


@pytest.fixture(scope="session")
def acceptance_report():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
