import pytest

# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        terminalreporter.write_line(ACCEPTANCE_LINES.get(n, f"criterion {n:>2}: NOT RUN  (deselected, or errored before its check)"))


@pytest.fixture
def criterion():
    def record(n, ok, detail):
        ACCEPTANCE_LINES[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail

    return record
