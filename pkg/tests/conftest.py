"""Summary lines for the acceptance suite.

Tests marked ``@pytest.mark.criterion(k, title)`` are grouped by ``k``;
a criterion passes when every test carrying its number passes.
"""

import pytest

_OUTCOMES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _OUTCOMES.setdefault(number, {"title": title, "ok": True, "seconds": 0.0,
                                          "tests": []})
    entry["seconds"] += rep.duration
    if rep.failed or (rep.when == "call" and rep.skipped):
        entry["ok"] = False
    if rep.when == "call":
        entry["tests"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        e = _OUTCOMES[number]
        status = "PASS" if e["ok"] else "FAIL"
        tr.write_line(f"{status}  criterion {number:>2}  {e['title']:<44} {e['seconds']:7.1f} s")
    passed = sum(e["ok"] for e in _OUTCOMES.values())
    tr.write_line(f"{passed}/{len(_OUTCOMES)} criteria passed")
