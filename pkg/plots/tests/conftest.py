"""Shared pytest hooks: echo acceptance verdict lines after the run.

Tests record one line per acceptance criterion through the `verdicts`
fixture; the lines are replayed in the terminal summary, where pytest's
output capture is off, so verdicts are visible without -s.
"""

import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdicts():
    def record(line: str) -> None:
        print(line, flush=True)
        _VERDICTS.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
