"""Collects one PASS/FAIL line per acceptance criterion and prints them after the run."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    number, title = mark.args
    detail = dict(report.user_properties).get("detail", "")
    prev = _RESULTS.get(number)
    ok = report.passed and (prev is None or prev[1])
    _RESULTS[number] = (title, ok, detail or (prev[2] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, detail = _RESULTS[number]
        line = f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(f"{line}  {detail}" if detail else line)
