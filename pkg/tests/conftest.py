import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from Atoms import EitParams  # noqa: E402

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "configs"))


@pytest.fixture
def eit_params():
    """Drive parameters of the single-battery scenarios (omega = 1, omega_m = 0.5)."""
    return EitParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20201117)


@pytest.fixture
def config_dir():
    return CONFIG_DIR


def random_density(rng, dim, rank=None):
    """Random density matrix of unit trace."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)
