"""Acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _RESULTS.setdefault(number, {"title": title, "passed": True, "seconds": 0.0, "notes": {}})
    if rep.when == "call":
        entry["seconds"] += rep.duration
        entry["notes"].update(dict(item.user_properties))
    if rep.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        verdict = "PASS" if e["passed"] else "FAIL"
        notes = " ".join(f"{k}={v}" for k, v in sorted(e["notes"].items()))
        tr.write_line(f"criterion {number:2d} {verdict}  {e['title']} [{e['seconds']:.1f}s] {notes}".rstrip())
