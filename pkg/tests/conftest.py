import numpy as np
import pytest


def brute_correlation(x, y):
    """Double-loop periodic correlation, independent of the package code."""
    L = len(x)
    out = []
    for tau in range(L):
        acc = 0j
        for n in range(L):
            acc += complex(x[n]) * complex(y[(n + tau) % L]).conjugate()
        out.append(acc)
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail=""):
    """Register one PASS/FAIL line for the acceptance summary and echo it."""
    line = f"{'PASS' if ok else 'FAIL'} {criterion}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
