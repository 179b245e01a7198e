import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_row_stochastic(rng, n, m, sparsity=0.0):
    P = rng.dirichlet(np.ones(m), size=n)
    if sparsity:
        P = P * (rng.random((n, m)) >= sparsity)
        empty = P.sum(axis=1) == 0
        P[empty, rng.integers(m, size=empty.sum())] = 1.0
        P = P / P.sum(axis=1, keepdims=True)
    return P


def random_column_stochastic(rng, n, m):
    return rng.dirichlet(np.ones(n), size=m).T
