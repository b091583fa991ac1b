import time
from contextlib import contextmanager

import numpy as np
import pytest

from leakychirp.timing import get_timing

# (number, title, passed, detail) for every acceptance criterion that ran
ACCEPTANCE_LOG: list[tuple[int, str, bool, str]] = []


@pytest.fixture(scope="session")
def t1080():
    return get_timing("1080p60")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


class _Criterion:
    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.notes: list[str] = []

    def note(self, text: str):
        self.notes.append(text)


@pytest.fixture
def criterion():
    """``with criterion(n, title, budget_s) as c:`` records one pass/fail line."""
    @contextmanager
    def run(number, title, budget_s):
        c = _Criterion(number, title, budget_s)
        t0 = time.perf_counter()
        try:
            yield c
            elapsed = time.perf_counter() - t0
            assert elapsed < budget_s, f"took {elapsed:.1f} s, budget {budget_s} s"
        except BaseException as exc:
            elapsed = time.perf_counter() - t0
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            ACCEPTANCE_LOG.append((number, title, False, f"{elapsed:.1f} s; {msg}"))
            raise
        ACCEPTANCE_LOG.append((number, title, True, f"{elapsed:.1f} s; " + "; ".join(c.notes)))
    return run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title} ({detail})")
