import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

TITLES = {
    1: "exact constrained solutions (100 instances, 1e5 noiseless steps)",
    2: "telescoping identities (25 trajectories, T = 10, 100, 5000)",
    3: "synthetic experiment: slope, floors, majorant",
    4: "error bound vs empirical error at T = 100, 1000, 5000",
    5: "GTD experiment: eps values, ordering, slopes, root",
    6: "property suites (>= 50 cases each)",
    7: "byte-identical reruns of every subcommand",
}

_outcomes = {}
_notes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def note(request):
    """note(text): attach a measured value to the test's acceptance line."""
    marker = request.node.get_closest_marker("criterion")
    key = marker.args[0] if marker else None

    def add(text):
        _notes.setdefault(key, []).append(text)
    return add


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    # a criterion passes only if every phase of every test tagged with it passed
    ok = not (report.failed or report.skipped)
    _outcomes[crit] = _outcomes.get(crit, True) and ok


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker:
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_outcomes):
        status = "PASS" if _outcomes[crit] else "FAIL"
        tr.write_line(f"criterion {crit}: {status}  {TITLES.get(crit, '')}")
        for text in _notes.get(crit, []):
            tr.write_line(f"    {text}")
