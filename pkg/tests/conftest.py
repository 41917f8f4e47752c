import numpy as np
import pytest

from regnmf.nmf import FactorPair

EPS = np.finfo(float).eps


def random_scalar_weights(rng):
    from regnmf.weights import ScalarWeights
    return ScalarWeights(*rng.uniform(0, 1, size=6))


def random_psd_nonneg(rng, n, full_rank=True):
    """Symmetric, elementwise non-negative, positive (semi)definite matrix."""
    a = rng.uniform(0, 1, size=(n + 2 if full_rank else max(1, n - 2), n))
    return a.T @ a


def exact_problem(rng, rows, cols, rank):
    l = rng.uniform(size=(rows, rank))
    r = rng.uniform(size=(rank, cols))
    return l @ r, FactorPair(l, r)


def descent_slack(prev, y_norm, rel=1e-10):
    """Allowed objective increase: stated relative slack plus the rounding
    floor of evaluating 1/2||Y - LR||^2."""
    return rel * abs(prev.objective) + 16 * EPS * y_norm * (prev.frob_error + EPS * y_norm)


def assert_trace_monotone(trace, y_norm, rel=1e-10, only=None):
    for a, b in zip(trace, trace[1:]):
        if only is not None and not only(b):
            continue
        assert b.objective <= a.objective + descent_slack(a, y_norm, rel), (
            f"objective rose at iteration {b.iter}: {a.objective!r} -> {b.objective!r}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(rep, "when", "call") == "call":
                lines.append((nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")
