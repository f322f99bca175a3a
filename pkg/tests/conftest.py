import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; it is echoed in the terminal summary."""
    def _report(number: int, name: str, passed: bool, detail: str) -> bool:
        _LINES.append(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
        print(_LINES[-1])
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
