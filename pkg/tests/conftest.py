import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(name): acceptance criterion; prints one PASS/FAIL line per test",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        status = "PASS" if rep.passed else "FAIL"
        reporter.write_line(f"[criterion] {marker.args[0]}: {status}")
