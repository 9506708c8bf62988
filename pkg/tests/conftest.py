"""Shared fixtures and the per-criterion PASS/FAIL summary for the acceptance gate."""
from __future__ import annotations

from collections import OrderedDict

import pytest

from feicode.dtree import parse_tree

FIG1 = "(1 (5 +1 (3 -1 +1)) (3 -1 +1))"

_criteria: "OrderedDict[int, list[str]]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number checked by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = getattr(report, "_criterion", None)
    if number is not None:
        _criteria.setdefault(number, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        outcomes = _criteria[number]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  ({len(outcomes)} checks)")


@pytest.fixture
def fig1():
    return parse_tree(FIG1)
