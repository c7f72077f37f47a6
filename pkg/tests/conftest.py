import numpy as np
import pytest

_ACCEPTANCE = []


def record_acceptance(number, name, passed, detail=""):
    _ACCEPTANCE.append((number, name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def low_rank_plus_sparse(seed, n=50, rank=2, frac=0.05, amp=10.0):
    """Ground truth for recovery tests: ``A @ B.T`` plus uniform sparse spikes."""
    g = np.random.default_rng(seed)
    L = g.standard_normal((n, rank)) @ g.standard_normal((n, rank)).T
    S = np.zeros((n, n))
    k = int(round(frac * n * n))
    idx = g.choice(n * n, size=k, replace=False)
    S.flat[idx] = g.uniform(-1.0, 1.0, size=k) * amp
    return L, S
