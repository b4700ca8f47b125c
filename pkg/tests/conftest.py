"""Acceptance bookkeeping: tests marked ``criterion(n, title)`` roll up to one line each."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


def _entry(item):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return None
    number, title = marker.args
    return _RESULTS.setdefault(number, {"title": title, "passed": 0, "failed": [], "notes": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = _entry(item)
    if entry is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.passed:
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)


@pytest.fixture
def note(request):
    """Attach a measured value to the criterion summary line."""
    entry = _entry(request.node)

    def add(text):
        if entry is not None:
            entry["notes"].append(text)

    return add


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "FAIL" if entry["failed"] else "PASS"
        total = entry["passed"] + len(entry["failed"])
        tr.write_line(f"criterion {number}: {status}  {entry['title']}  ({entry['passed']}/{total} checks)")
        for text in entry["notes"]:
            tr.write_line(f"    {text}")
        for name in entry["failed"]:
            tr.write_line(f"    failed: {name}")
