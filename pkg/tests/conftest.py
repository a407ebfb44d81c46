from __future__ import annotations

import pytest

CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; the lines are
    printed in the terminal summary."""
    def record(number: int, ok: bool, detail: str) -> bool:
        CRITERIA.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(CRITERIA[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
