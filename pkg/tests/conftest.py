import pytest

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """record(ac, ok, text): one pass/fail line per acceptance criterion, echoed in the summary."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(ac: int, ok: bool, text: str) -> bool:
        line = f"AC{ac} {'PASS' if ok else 'FAIL'}  {text}"
        lines[ac] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for ac in sorted(lines):
            terminalreporter.write_line(lines[ac])
