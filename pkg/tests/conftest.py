import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one acceptance line; the summary prints them after the run."""
    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d} {title}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        _LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
