"""Shared fixtures plus the acceptance-criteria summary hook.

Acceptance tests record one (criterion, ok, detail) entry each; the
terminal-summary hook prints one PASS/FAIL line per criterion after the
run so the verdicts survive pytest's output capture.
"""

import pytest

ACCEPTANCE_RESULTS = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, title, ok, detail))


@pytest.fixture
def acceptance():
    """Callable fixture: acceptance(number, title, ok, detail)."""
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria")
    terminalreporter.write_line("-------------------")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{verdict}] {title}: {detail}")
