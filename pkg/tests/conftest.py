import pytest

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record one line per acceptance criterion: criterion(n, ok, detail); ok=None means skipped."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(n, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        lines[n] = f"criterion {n}: {status}  {detail}"
        print(lines[n])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[ACCEPTANCE_KEY]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
