"""Shared fixtures. Heavy objects are session-scoped so suites can share them."""

import numpy as np
import pytest

from ntklab.activation import normalize
from ntklab.datagen import generate


@pytest.fixture(scope="session")
def relu():
    return normalize("relu")


@pytest.fixture(scope="session")
def arctan():
    return normalize("arctan")


@pytest.fixture(scope="session")
def cos_act():
    return normalize("cos")


@pytest.fixture(scope="session")
def sigmoid():
    return normalize("sigmoid")


@pytest.fixture(scope="session")
def identity():
    return normalize("identity")


@pytest.fixture(scope="session")
def gauss_small():
    # 80 x 60 iid scaled Gaussian data, small enough for exact-route checks
    return generate("gaussian-iid-scaled", d0=80, n=60, seed=11)


@pytest.fixture(scope="session")
def sphere_small():
    return generate("sphere-uniform", d0=80, n=60, seed=12)


@pytest.fixture(scope="session")
def ortho_cols():
    # first n columns of a d0 x d0 orthogonal matrix: exactly orthonormal data
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.standard_normal((80, 80)))
    return q[:, :40].copy()
