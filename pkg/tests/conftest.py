import pytest

from tinbl.rns import Rns

# Filled by test_acceptance; one (criterion, passed, detail) per check.
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def rns3():
    return Rns(3, 42)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
