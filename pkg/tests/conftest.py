import pytest

_results_key = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_results_key] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome, print it, and assert it."""
    results = request.config.stash[_results_key]

    def check(cid, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {cid}: {title}" + (f" -- {detail}" if detail else "")
        results.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_results_key, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
