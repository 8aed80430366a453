import mpmath as mp
import pytest

VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[VERDICTS] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def precision():
    with mp.workdps(64):
        yield


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    seen = []

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        seen.append(line)
        request.config.stash[VERDICTS].append(line)
        print(line)
        assert ok, line

    yield record
    if not seen:
        request.config.stash[VERDICTS].append(f"FAIL  {request.node.name}  (raised before a verdict)")
