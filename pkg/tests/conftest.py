import numpy as np
import pytest

from gdm_parabolic import WeightOperator, build_cvfe, build_p1


def dense(A):
    return A.toarray() if hasattr(A, 'toarray') else np.asarray(A)


def hat_matrices(M):
    """Independent P1 stiffness / consistent mass / lumped mass on (0, 1)."""
    h = 1.0 / (M + 1)
    K = (2 * np.eye(M) - np.eye(M, k=1) - np.eye(M, k=-1)) / h
    Mc = h * (4 * np.eye(M) + np.eye(M, k=1) + np.eye(M, k=-1)) / 6
    return K, Mc, h * np.eye(M)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=['cvfe', 'p1'])
def disc(request):
    return {'cvfe': build_cvfe, 'p1': build_p1}[request.param]


def identity(D):
    return WeightOperator.identity(D.ncells_g)
