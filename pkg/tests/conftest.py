"""Acceptance reporting: one PASS/FAIL line per criterion in the terminal summary."""

from collections import defaultdict

import pytest

_CLAUSES = defaultdict(list)  # criterion -> [(clause, title, outcome, measured)]
_TITLES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion, clause, title): acceptance criterion clause")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    criterion, clause, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        measured = dict(item.user_properties).get("measured", "")
        _TITLES.setdefault(criterion, title)
        _CLAUSES[criterion].append((clause, report.outcome, measured))


def pytest_terminal_summary(terminalreporter):
    if not _CLAUSES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(_CLAUSES, key=int):
        clauses = sorted(_CLAUSES[criterion])
        ok = all(o == "passed" for _, o, _ in clauses)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {_TITLES[criterion]}")
        for clause, o, measured in clauses:
            tag = "pass" if o == "passed" else "FAIL"
            tr.write_line(f"        {tag}  {clause}  {measured}")
