import pytest

_LINES = {}


@pytest.fixture
def criterion():
    """Record a one-line PASS/FAIL verdict for a numbered acceptance criterion."""

    def record(number, passed, detail):
        _LINES[number] = "criterion %d: %s  %s" % (number, "PASS" if passed else "FAIL", detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
