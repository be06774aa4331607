import pytest

from qkdplan.scenarios import build_scenarios
from qkdplan.topology import build_usnet

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        status = "PASS" if report.passed else "FAIL"
        details = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        line = f"{status}  criterion {marker.args[0]}: {marker.args[1]}"
        _ACCEPTANCE.append(line + (f" [{details}]" if details else ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def usnet():
    return build_usnet()


@pytest.fixture(scope="session")
def reference_set():
    return build_scenarios(10, 10 / 3, 0.0, seed=0)
