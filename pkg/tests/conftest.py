import numpy as np
import pytest

from qdistill.states import make_rng, random_density

_ACCEPTANCE_LINES = []


def record_criterion(number, name, ok, detail=""):
    _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return make_rng(12345)


def random_hermitian(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_matrix(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_ppt_state(d_a, d_b, rng):
    """Rejection sample: random state mixed with white noise until PPT."""
    from qdistill.states import DensityMatrix, is_ppt

    n = d_a * d_b
    while True:
        rho = random_density(d_a, d_b, seed=rng.integers(2**32))
        p = rng.random()
        m = p * rho.matrix + (1 - p) * np.eye(n) / n
        cand = DensityMatrix(m, d_a, d_b)
        if is_ppt(cand, tol=0.0):
            return cand
