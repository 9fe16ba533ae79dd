import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from flatflow import backend


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true",
                     help="skip the long acceptance runs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-slow"):
        marker = pytest.mark.skip(reason="--skip-slow")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(marker)


@pytest.fixture(params=backend.available_backends())
def each_backend(request):
    """Run a test under every kernel backend, restoring the default afterwards."""
    before = backend.active_backend()
    backend.set_backend(request.param)
    yield request.param
    backend.set_backend(before)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in RESULTS:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {name}: {detail}")
