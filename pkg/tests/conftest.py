import pytest

from robin_tfree.bounds import GParams
from robin_tfree.primes import sieve


@pytest.fixture(scope="session")
def table_1e6():
    return sieve(10**6)


@pytest.fixture(scope="session")
def params():
    return GParams()


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def record(label: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
