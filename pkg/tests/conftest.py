import pytest

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    failed = report.failed
    prev = _ACCEPTANCE.get(n, (title, "PASS"))
    if report.when == "call" or failed:
        _ACCEPTANCE[n] = (title, "FAIL" if failed or prev[1] == "FAIL" else "PASS")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {title}")
