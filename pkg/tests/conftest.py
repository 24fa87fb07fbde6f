import pytest

# criterion number -> [passed, details]
_CRITERIA = {}
# informational lines recorded with record_property("note", ...)
_NOTES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        _NOTES.extend(v for k, v in item.user_properties if k == "note")
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    entry = _CRITERIA.setdefault(marker.args[0], [True, []])
    entry[0] = entry[0] and rep.passed
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if rep.failed and not detail:
        detail = f"{item.name} failed during {rep.when}"
    if detail:
        entry[1].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, details = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {' | '.join(details)}")
    for note in _NOTES:
        terminalreporter.write_line(f"note: {note}")
