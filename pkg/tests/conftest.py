"""
Shared fixtures for the hypocoax test-suite.

Author: Hypocoax Team
"""

import numpy as np
import pytest

from hypocoax.lp.spectral_field import SpectralField
from hypocoax.simulator.euler import make_euler_system
from hypocoax.systems.system_model import LinearizedSystem, linearize, make_linear_system

SEED = 20240601


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def euler_1d():
    return make_euler_system(1)


@pytest.fixture
def euler_2d():
    return make_euler_system(2)


@pytest.fixture
def euler_lin_1d(euler_1d):
    return linearize(euler_1d)


@pytest.fixture
def euler_lin_2d(euler_2d):
    return linearize(euler_2d)


@pytest.fixture
def full_dissipation():
    """N = I_2 with a symmetric flux: certifies on the first attempt."""
    return LinearizedSystem.from_generators(np.eye(2), [[[0.0, 0.5], [0.5, 0.0]]], n1=0)


@pytest.fixture
def sk_failure():
    """M = I, N = diag(0, 1): e_1 is never damped."""
    return LinearizedSystem.from_generators(np.diag([0.0, 1.0]), [np.eye(2)], n1=1)


@pytest.fixture
def coupled_linear_system():
    """Linear 1D telegraph-type system in constant-coefficient form."""
    A = [np.eye(2), [[0.0, 1.0], [1.0, 0.0]]]
    L = np.diag([0.0, 1.0])
    return make_linear_system(A, L, n1=1, name="telegraph")


def random_band_field(rng, n_components, resolution, box_length, k_max):
    """Real random field whose integer wavevectors satisfy |k|_inf <= k_max, zero mean."""
    values = rng.standard_normal((n_components,) + tuple(resolution))
    field = SpectralField.from_physical(values, box_length)
    grid = field.grid
    mask = np.all(np.abs(grid.wavenumbers) <= k_max, axis=0)
    coeffs = field.coeffs * mask
    coeffs[(slice(None),) + (0,) * grid.d] = 0.0
    return field.with_coeffs(coeffs)
