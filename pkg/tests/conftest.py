import numpy as np
import pytest

from nadecomplete.model import NadeModel, init_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_model():
    """D=4 model small enough for exact enumeration."""
    return init_model(4, 6, 5, seed=3)


@pytest.fixture
def grad_model():
    """The D=5, H=4 model used for finite-difference checks."""
    return init_model(5, 4, 4, seed=5)


def constant_model(D, H1=2, H2=2, fill=0.0, b3=0.0, seed=0):
    """Model with every weight set to `fill` and output bias `b3`."""
    m = init_model(D, H1, H2, seed=seed)
    m.set_parameters({
        "W1": np.full_like(m.W1, fill),
        "b1": np.zeros_like(m.b1),
        "W2": np.full_like(m.W2, fill),
        "b2": np.zeros_like(m.b2),
        "W3": np.full_like(m.W3, fill),
        "b3": np.full_like(m.b3, b3),
    })
    return m


def random_bits(rng, n, D):
    return (rng.random((n, D)) < 0.5).astype(np.float64)
