import numpy as np
import pytest


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def bpsk(rng, n, m):
    return rng.choice([-1.0, 1.0], size=(n, m))


def uniform_unit(rng, n, m):
    return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(n, m))


def sym_whiten(x):
    """Whiten with ``C^(-1/2)``: no rotation, so independent rows stay on their axes."""
    x = x - x.mean(axis=1, keepdims=True)
    lam, e = np.linalg.eigh(x @ x.T / x.shape[1])
    return (e / np.sqrt(lam)) @ e.T @ x


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def verdicts():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
