import pytest

from clientdiv.identity import CodeSegment, build_registry
from clientdiv.proofs import NodeKey

_acceptance = {}


@pytest.fixture(scope="session")
def registry():
    return build_registry(
        CodeSegment(impl, "attest", f"client{impl}-v1".encode()) for impl in "ABC")


@pytest.fixture(scope="session")
def keys():
    return [NodeKey.from_seed(7, i) for i in range(6)]


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
