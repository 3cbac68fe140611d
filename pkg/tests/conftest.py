"""Shared fixtures; collects the acceptance verdict lines for the terminal summary."""

import pytest

_ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record ``(criterion, ok, detail)``; the line is printed at the end of the run."""

    def record(criterion, ok, detail=""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: (int(s.split()[1].rstrip(":").rstrip("abc")), s)):
        terminalreporter.write_line(line)
