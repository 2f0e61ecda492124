import pytest

from moralrl.dsl import camping_model

# (criterion, passed, detail) recorded by test_acceptance.py
ACCEPTANCE: list = []


@pytest.fixture(scope="session")
def camping():
    return camping_model()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
