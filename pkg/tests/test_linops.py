import numpy as np
import pytest
from numpy.testing import assert_allclose

import linops
from conftest import random_density, random_hermitian


def test_eig_hermitian_reconstructs_random_matrices(rng):
    for dim in (1, 2, 5, 12):
        a = random_hermitian(rng, dim)
        eigen = linops.eig_hermitian(a)
        assert np.all(np.diff(eigen.values) >= 0)
        assert_allclose(eigen.reconstruct(), a, atol=1e-10)
        assert_allclose(eigen.vectors.conj().T @ eigen.vectors, np.eye(dim), atol=1e-10)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(linops.NotHermitianError):
        linops.eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_general_eigenpairs_and_order(rng):
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    eigen = linops.eig_general(a)
    assert_allclose(a @ eigen.vectors, eigen.vectors * eigen.values, atol=1e-9)
    assert_allclose(np.linalg.norm(eigen.vectors, axis=0), 1.0)
    assert np.all(np.diff(eigen.values.real) >= 0)


def test_eig_general_non_hermitian_three_level():
    a = np.array([[0, 50, 0], [50, 1.75 + 0.05j, 5], [0, 5, 0.75 + 0.05j]])
    eigen = linops.eig_general(a)
    for value in eigen.values:
        assert abs(np.linalg.det(a - value * np.eye(3))) < 1e-6 * np.linalg.norm(a) ** 3


def test_eig_general_rejects_defective_matrix():
    with pytest.raises(linops.DefectiveMatrixError):
        linops.eig_general(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_eig_general_dimension_limit():
    with pytest.raises(linops.DimensionMismatchError):
        linops.eig_general(np.eye(65))


def test_expm_unitary_for_hermitian_generator(rng):
    h = random_hermitian(rng, 8)
    u = linops.expm(h, -1j * 0.7)
    assert_allclose(u @ u.conj().T, np.eye(8), atol=1e-12)
    eigen = linops.eig_hermitian(h)
    expected = (eigen.vectors * np.exp(-0.7j * eigen.values)) @ eigen.vectors.conj().T
    assert_allclose(u, expected, atol=1e-10)


def test_expm_diagonal_and_zero():
    assert_allclose(linops.expm(np.diag([1.0, -2.0]), 0.5), np.diag(np.exp([0.5, -1.0])))
    assert_allclose(linops.expm(np.zeros((3, 3))), np.eye(3))


def test_expm_overflow():
    with pytest.raises(linops.ExpmOverflowError) as error:
        linops.expm(np.eye(2), 1e6)
    assert error.value.norm == pytest.approx(1e6)


def test_partial_trace_of_product_state(rng):
    rho_a, rho_b = random_density(rng, 3), random_density(rng, 4)
    rho = np.kron(rho_a, rho_b)
    assert_allclose(linops.partial_trace(rho, (3, 4), keep="B"), rho_b, atol=1e-12)
    assert_allclose(linops.partial_trace(rho, (3, 4), keep="A"), rho_a, atol=1e-12)


def test_partial_trace_entangled_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = np.outer(bell, bell.conj())
    assert_allclose(linops.partial_trace(rho, (2, 2)), 0.5 * np.eye(2))


def test_partial_trace_errors():
    with pytest.raises(linops.DimensionMismatchError):
        linops.partial_trace(np.eye(6), (2, 2))
    with pytest.raises(ValueError):
        linops.partial_trace(np.eye(4), (2, 2), keep="C")


def test_is_hermitian_is_relative():
    a = np.array([[1e6, 1.0], [1.0 + 1e-8, 0.0]])
    assert linops.is_hermitian(a)
    assert not linops.is_hermitian(a, tol=1e-16)


def test_kron_all_order():
    a, b = np.diag([1, 2]), np.diag([1, 10])
    assert_allclose(np.diag(linops.kron_all([a, b])), [1, 10, 2, 20])
