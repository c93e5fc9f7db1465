import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from spsp.paths import standardize  # noqa: E402


def orthonormal_data(n, p, seed, beta=None, noise=0.5):
    """Standardized design with ``X'X/n == I`` and a linear response."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    X = np.sqrt(n) * Q
    if beta is None:
        beta = rng.normal(0, 1.5, p)
    y = X @ beta + noise * rng.standard_normal(n)
    return standardize(X, y)


@pytest.fixture
def ortho():
    return orthonormal_data(60, 6, seed=3)


@pytest.fixture(scope="session")
def m1_data():
    from spsp.simulation import build_design, sample_dataset

    ds = sample_dataset(build_design("M1"), seed=0)
    return standardize(ds.X, ds.y)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
