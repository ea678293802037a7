import pytest

_ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Record ``(number, title, passed, detail)`` for the end-of-run summary."""

    def rec(number, title, passed, detail=""):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return rec


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
