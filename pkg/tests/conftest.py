import pytest

_RESULTS: list[tuple[int, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance outcome; the summary prints a line per criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _RESULTS.append((number, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
