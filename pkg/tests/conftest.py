"""Pytest plumbing: acceptance-criterion bookkeeping and summary lines."""

from __future__ import annotations

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, text): numbered acceptance criterion, reported in the summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, text = marker.args
    if report.when == "call":
        _RESULTS[num] = (text, "PASS" if report.passed else "FAIL")
    elif report.when == "setup" and report.failed:
        _RESULTS[num] = (text, "FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        text, verdict = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {verdict} - {text}")
