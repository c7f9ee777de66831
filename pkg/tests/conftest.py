import sys

import pytest

from pseudonet.gadget import build_gadget_T


@pytest.fixture(scope="session")
def gadget():
    return build_gadget_T()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
