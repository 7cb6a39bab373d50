"""Shared pytest hooks: acceptance criteria report one summary line each."""

import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Record ``CRITERION <id>: PASS|FAIL <detail>`` and return the verdict."""

    def record(cid, passed, detail=""):
        line = f"CRITERION {cid}: {'PASS' if passed else 'FAIL'} {detail}".rstrip()
        _LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
