import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Record ``criterion k: PASS|FAIL`` lines; failing checks fail the test."""

    def record(k, checks):
        ok = all(c.passed for c in checks)
        detail = "; ".join(c.line() for c in checks)
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  [{detail}]"
        _LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
