import pytest

_verdicts = []


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(number, ok, detail)``."""
    def record(number, ok, detail):
        _verdicts.append((number, ok, detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_verdicts):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
