from __future__ import annotations

import pytest

from chronocanvas.graph import Composition
from chronocanvas.schema import fixture_path, load_composition


@pytest.fixture
def fig1() -> Composition:
    return load_composition(fixture_path("fig1.json"))


@pytest.fixture
def fig2() -> Composition:
    return load_composition(fixture_path("fig2.json"))



_criteria: dict[str, list[bool]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.outcome == "failed":
        _criteria.setdefault(props["criterion"], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for title in sorted(_criteria, key=lambda t: int(t.split(".")[0])):
        results = _criteria[title]
        verdict = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"{verdict}  {title}")
