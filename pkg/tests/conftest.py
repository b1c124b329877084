import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

_ACCEPTANCE: list = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(line): criterion checked by this test, echoed in the summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        report.acceptance_line = marker.args[0]


def pytest_runtest_logreport(report):
    line = getattr(report, "acceptance_line", None)
    if line is not None:
        _ACCEPTANCE.append((line, report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line, outcome in _ACCEPTANCE:
        tag = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"[{tag}] {line}")
