"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import pytest

CRITERIA = {
    1: "deviation arithmetic reproduces the worked table",
    2: "digit merge reproduces the worked example",
    3: "solver finds keys for all 90 corpus positions and both keys of the cooked ones",
    4: "perft of the initial position is 20/400/8902",
    5: "50,000-attempt dsns run emits valid compositions",
    6: "bench matrix is complete and random emissions validate",
    7: "property suites pass 10,000 cases each within a minute",
    8: "attribute extractors meet their closed-form values",
}

_outcomes: dict = {}
_notes: dict = {}


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the criterion of the calling test."""
    n = request.node.get_closest_marker("criterion").args[0]
    return lambda text: _notes.setdefault(n, []).append(text)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when == "teardown":
        return
    n = marker.args[0]
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    skipped = call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception)
    state = _outcomes.setdefault(n, {"failed": [], "ran": 0, "skipped": 0})
    if call.when == "call":
        state["ran"] += 1
        state["skipped"] += skipped
    if failed:
        state["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        state = _outcomes.get(n)
        if state is None or state["ran"] == 0:
            verdict = "NOT RUN"
        elif state["failed"]:
            verdict = "FAIL (" + ", ".join(state["failed"]) + ")"
        elif state["skipped"] == state["ran"]:
            verdict = "SKIPPED"
        else:
            verdict = "PASS"
        tr.write_line(f"criterion {n}: {verdict}  {title}")
        for text in _notes.get(n, []):
            tr.write_line(f"    {text}")
