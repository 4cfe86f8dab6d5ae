import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_hermitian(rng, dim, scale=1.0):
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (G + G.conj().T) / 2


def random_traceless(rng, dim):
    H = random_hermitian(rng, dim)
    return H - np.trace(H).real / dim * np.eye(dim)


def kernel_pair(rng, dim, kernel_dim):
    """Traceless (A, B) whose difference has a kernel of the given dimension."""
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    vals = rng.standard_normal(dim - kernel_dim)
    vals -= vals.mean()
    delta = Q[:, kernel_dim:] @ np.diag(vals) @ Q[:, kernel_dim:].conj().T
    B = random_traceless(rng, dim)
    return B + delta, B


def random_state(rng, dim=2):
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
