import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bimodal_jcm.linalg import (
    LinalgError,
    dagger,
    expm_antihermitian,
    frobenius_distance,
    herm_eig,
    kron,
    trace,
)
from conftest import random_hermitian

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_kron_identities():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    np.testing.assert_array_equal(kron(np.diag([1, 2]), np.eye(2)), np.diag([1, 1, 2, 2]))


def test_kron_index_map(rng):
    a = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    b = rng.normal(size=(4, 2))
    k = kron(a, b)
    assert k.shape == (8, 6)
    for i, j, p, q in [(1, 2, 3, 1), (0, 0, 0, 0), (1, 0, 2, 1)]:
        assert k[i * 4 + p, j * 2 + q] == a[i, j] * b[p, q]


def test_kron_mixed_product(rng):
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-13)


def test_kron_associative(rng):
    # integer entries keep every product exact, so only the index map is tested
    a, b, c = (rng.integers(-9, 9, (2, 3)) + 1j * rng.integers(-9, 9, (2, 3)) for _ in range(3))
    np.testing.assert_array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_herm_eig_examples():
    w, _ = herm_eig(np.eye(2))
    np.testing.assert_allclose(w, [1, 1])
    w, _ = herm_eig(np.diag([3.0, -1.0]))
    np.testing.assert_allclose(w, [-1, 3])
    w, _ = herm_eig(PAULI_X)
    np.testing.assert_allclose(w, [-1, 1], atol=1e-15)


def test_herm_eig_reconstruction(rng):
    a = random_hermitian(rng, 12)
    w, v = herm_eig(a)
    assert np.all(np.diff(w) >= 0)
    assert np.abs(v.conj().T @ v - np.eye(12)).max() <= 1e-10
    assert np.abs(v @ np.diag(w) @ v.conj().T - a).max() <= 1e-10 * np.abs(a).max()
    assert abs(w.sum() - np.trace(a).real) <= 1e-10 * 12 * np.abs(a).max()


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(LinalgError, match="not Hermitian"):
        herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_expm_zero_is_identity():
    np.testing.assert_array_equal(expm_antihermitian(np.zeros((3, 3))), np.eye(3))


def test_expm_pauli_quarter_turn():
    # exp(i theta X) = cos(theta) I + i sin(theta) X
    u = expm_antihermitian(1j * np.pi / 2 * PAULI_X)
    assert np.abs(u - 1j * PAULI_X).max() <= 1e-12


def test_expm_rejects_hermitian_generator():
    with pytest.raises(LinalgError):
        expm_antihermitian(PAULI_X)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 50.0))
def test_expm_unitary_and_inverse(seed, scale):
    rng = np.random.default_rng(seed)
    g = 1j * scale * random_hermitian(rng, 8)
    u = expm_antihermitian(g)
    assert np.abs(u.conj().T @ u - np.eye(8)).max() <= 1e-10
    assert np.abs(u @ expm_antihermitian(-g) - np.eye(8)).max() <= 1e-10


def test_trace_dagger_distance(rng):
    assert trace(np.eye(5)) == 5
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert frobenius_distance(a, a) == 0
    assert abs(trace(a @ b) - trace(b @ a)) <= 1e-12
    np.testing.assert_array_equal(dagger(a), a.conj().T)
    with pytest.raises(LinalgError):
        frobenius_distance(a, np.eye(3))
