import numpy as np
import pytest

from scsid.model import EpochDriven, ModelSpec


def random_spec(rng, K, n_d, n_y=None, per_model=None, shuffle=True):
    """Noise-free random JLM satisfying the rank condition, with its input design."""
    n_y = n_y if n_y is not None else (K - 1) * n_d + int(rng.integers(0, 2))
    per_model = per_model or int(rng.integers(n_d + 3, 12))
    thetas = [rng.standard_normal((n_y, n_d)) for _ in range(K)]
    sizes = [per_model] * K
    rule = EpochDriven.from_blocks(sizes, int(rng.integers(1 << 30)) if shuffle else None)
    D = rng.uniform(-1, 1, size=(n_d, sum(sizes)))
    return ModelSpec(tuple(thetas), 0.0, 0.0, rule), D


def projector_blocks(D, labels):
    """Oracle for the noiseless similarity: |D_i^T (D_i D_i^T)^{-1} D_i| placed
    at the rows/columns of each submodel, zero elsewhere."""
    N = D.shape[1]
    W = np.zeros((N, N))
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        Dk = D[:, idx]
        W[np.ix_(idx, idx)] = np.abs(Dk.T @ np.linalg.inv(Dk @ Dk.T) @ Dk)
    return W


def same_partition(a, b):
    """True if two labelings agree up to a relabelling."""
    a, b = np.asarray(a), np.asarray(b)
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
