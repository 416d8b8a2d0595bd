import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = "; ".join(v for k, v in item.user_properties if k == "detail")
        _RESULTS[mark.args[0]] = (mark.args[1], report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, ok, detail = _RESULTS[n]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {title}"
        if detail:
            line += f" | {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def note(request):
    """Attach a detail string to the acceptance summary line of this test."""
    def add(text):
        request.node.user_properties.append(("detail", text))
    return add
