import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): an acceptance criterion")
    config._criteria = {}


@pytest.fixture
def detail(request):
    """Attach a measured summary to the criterion line of the current test."""
    notes = []
    request.node._criterion_notes = notes
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, text = mark.args
    ok = rep.passed and rep.when == "call"
    notes = "; ".join(getattr(item, "_criterion_notes", []))
    item.config._criteria[number] = (ok, text, notes)


def pytest_terminal_summary(terminalreporter, config):
    if not config._criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(config._criteria):
        ok, text, notes = config._criteria[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        terminalreporter.write_line(line + (f"  [{notes}]" if notes else ""))
