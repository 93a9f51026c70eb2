"""Shared builders for the test suite.

numpy.linalg / exhaustive enumeration serve as independent oracles
throughout; the package's own Jacobi SVD is the implementation under test.
"""

import numpy as np
import pytest

from modalkit import JointPmf, Pmf, alphabet


def bss(rho: float, x_symbols=("0", "1"), y_symbols=("0", "1")) -> JointPmf:
    """Binary symmetric pair: uniform X, Y agreeing with probability (1+rho)/2."""
    p = np.array(
        [[(1 + rho) / 4, (1 - rho) / 4], [(1 - rho) / 4, (1 + rho) / 4]]
    )
    return JointPmf(alphabet(x_symbols), alphabet(y_symbols), p)


def random_joint(rng: np.random.Generator, nx: int, ny: int, conc: float = 3.0) -> JointPmf:
    """Strictly positive random joint table (Dirichlet cells)."""
    table = rng.dirichlet(np.full(nx * ny, conc)).reshape(nx, ny)
    table = np.maximum(table, 1e-9)
    table /= table.sum()
    return JointPmf(
        alphabet(f"x{i}" for i in range(nx)),
        alphabet(f"y{j}" for j in range(ny)),
        table,
    )


def random_pmf(rng: np.random.Generator, n: int, conc: float = 6.0) -> Pmf:
    p = rng.dirichlet(np.full(n, conc))
    p = np.maximum(p, 1e-6)
    return Pmf(alphabet(f"z{i}" for i in range(n)), p / p.sum())


def projector(cols: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(cols)
    return q @ q.T


def assert_code(excinfo, code: str) -> None:
    assert excinfo.value.code == code, f"expected {code}, got {excinfo.value.code}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
