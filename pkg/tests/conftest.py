"""Print one PASS/FAIL line per acceptance criterion at the end of each run."""

from __future__ import annotations

import re

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results: dict[int, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = _CRITERION.search(report.nodeid)
    if match:
        number = int(match.group(1))
        outcome = "PASS" if report.passed else "FAIL"
        if _results.get(number) == "FAIL":
            outcome = "FAIL"
        _results[number] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        terminalreporter.write_line(f"ACCEPTANCE {number}: {_results[number]}")
