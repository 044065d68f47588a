import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance verdict line; all lines are echoed in the terminal summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def _emit(number, passed, text):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {text}"
        lines.append(line)
        print(line)

    return _emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
