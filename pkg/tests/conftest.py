import contextlib

import numpy as np
import pytest

from emofuse.synth import make_fixture


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Synthetic corpus shared by the CLI tests."""
    return make_fixture(tmp_path_factory.mktemp("corpus"), seed=0)


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's pass/fail line for the summary."""
    results = request.config.stash.setdefault(_RESULTS, [])

    @contextlib.contextmanager
    def record(number, title):
        try:
            yield
        except BaseException:
            results.append((number, title, False))
            print(f"[FAIL] criterion {number}: {title}")
            raise
        results.append((number, title, True))
        print(f"[PASS] criterion {number}: {title}")

    return record


_RESULTS = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok in sorted(results, key=lambda r: int(r[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}")
