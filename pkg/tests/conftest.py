import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL summary, then assert."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
