"""Collects per-criterion PASS/FAIL results for the acceptance summary."""

import pytest

_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "notes": []})
    if report.when == "call" or report.failed:
        if report.failed:
            entry["passed"] = False
        if report.when == "call":
            entry["notes"].extend(v for k, v in item.user_properties if k == "measured")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["passed"] else "FAIL"
        line = f"C{number:<2} {status}  {entry['title']}"
        terminalreporter.write_line(line)
        for note in entry["notes"]:
            terminalreporter.write_line(f"        {note}")


@pytest.fixture
def measured(request):
    """Record a measured quantity; shown under the criterion in the summary."""
    def note(text: str) -> None:
        request.node.user_properties.append(("measured", text))
    return note
