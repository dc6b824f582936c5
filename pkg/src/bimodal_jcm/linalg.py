"""Dense complex-matrix kernel.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Tolerances are relative to the largest entry magnitude unless noted.
"""
import numpy as np

__all__ = [
    "LinalgError",
    "as_matrix",
    "kron",
    "dagger",
    "trace",
    "frobenius_distance",
    "max_abs",
    "hermiticity_error",
    "commutator",
    "herm_eig",
    "expm_antihermitian",
]


class LinalgError(ValueError):
    """Raised when an input violates a kernel precondition."""


def as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise LinalgError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def kron(a, b):
    """Kronecker product; entry ((i*rb + k), (j*cb + l)) equals a[i, j] * b[k, l]."""
    return np.kron(as_matrix(a), as_matrix(b))


def dagger(a):
    return as_matrix(a).conj().T


def trace(a):
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise LinalgError(f"trace of non-square matrix {a.shape}")
    return complex(np.trace(a))


def _same_shape(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise LinalgError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def frobenius_distance(a, b):
    a, b = _same_shape(a, b)
    return float(np.linalg.norm(a - b))


def max_abs(a):
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


def hermiticity_error(a):
    """Absolute asymmetry max|A - A^dagger|."""
    a = as_matrix(a)
    return max_abs(a - a.conj().T)


def commutator(a, b):
    a, b = _same_shape(a, b)
    return a @ b - b @ a


def _check_hermitian(a, tol, what="Hermitian"):
    scale = max_abs(a)
    asym = hermiticity_error(a)
    if asym > tol * scale:
        raise LinalgError(f"matrix is not {what}: max|A - A^dagger| = {asym:.3e} (scale {scale:.3e})")


def herm_eig(a, tol=1e-10):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and the
    eigenvectors as orthonormal columns.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise LinalgError(f"herm_eig needs a square matrix, got {a.shape}")
    _check_hermitian(a, tol)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w, v


def expm_antihermitian(g, tol=1e-10):
    """exp(g) for anti-Hermitian ``g``, via the spectrum of the Hermitian ``i*g``.

    With i*g = V diag(w) V^dagger we get exp(g) = V diag(exp(-i w)) V^dagger,
    which is unitary up to the orthonormality of V.
    """
    g = as_matrix(g)
    if g.shape[0] != g.shape[1]:
        raise LinalgError(f"expm needs a square matrix, got {g.shape}")
    scale = max_abs(g)
    if scale == 0.0:
        return np.eye(g.shape[0], dtype=complex)
    asym = max_abs(g + g.conj().T)
    if asym > tol * scale:
        raise LinalgError(f"generator is not anti-Hermitian: max|G + G^dagger| = {asym:.3e}")
    w, v = np.linalg.eigh(0.5 * (1j * g + (1j * g).conj().T))
    return (v * np.exp(-1j * w)) @ v.conj().T
