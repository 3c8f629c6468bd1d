import pytest

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record and print one acceptance line: ``verdict(n, text, ok)``."""
    log = request.config.stash[_VERDICTS]

    def record(n: int, text: str, ok: bool) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
        print(line)
        log.append((n, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_VERDICTS, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log):
            terminalreporter.write_line(line)
