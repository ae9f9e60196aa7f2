import numpy as np
import pytest

from twoinf.linalg import random_orthonormal


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, n, r, noise=0.3):
    """Orthonormal U and a perturbed orthonormal Uhat of the same shape."""
    U = random_orthonormal(n, r, rng)
    Q, _ = np.linalg.qr(U + noise * rng.standard_normal((n, r)))
    return U, Q


def random_orthogonal_batch(k, r, rng):
    """k Haar-distributed r x r orthogonal matrices, shape (k, r, r)."""
    Q, R = np.linalg.qr(rng.standard_normal((k, r, r)))
    return Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
