"""Truncated atom (x) mode1 (x) mode2 Hilbert space.

Basis ordering is frozen with the atom slowest:

    index = (s * N + n1) * N + n2,    s = 0 (ground), 1 (excited)

so full-space operators are ``kron(atom, kron(mode1, mode2))``.  Build
operators through :func:`embed` rather than hand-rolled indices.
"""
from dataclasses import dataclass
import math

import numpy as np

from .linalg import LinalgError, as_matrix, kron

FACTORS = ("atom", "mode1", "mode2")


class HilbertSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceSpec:
    n_trunc: int

    def __post_init__(self):
        if int(self.n_trunc) != self.n_trunc or self.n_trunc < 2:
            raise HilbertSpaceError(f"n_trunc must be an integer >= 2, got {self.n_trunc}")

    @property
    def dims(self):
        return (2, self.n_trunc, self.n_trunc)

    @property
    def dim(self):
        return 2 * self.n_trunc**2

    def factor_dim(self, factor):
        return self.dims[FACTORS.index(factor)]


@dataclass(frozen=True)
class EmbeddedOperator:
    """Full-space matrix plus, for single-factor operators, its local form.

    ``local``, ``dims`` and ``axis`` are kept so that kernels can act on one
    tensor axis instead of the whole matrix.
    """

    matrix: np.ndarray
    label: str
    local: np.ndarray = None
    dims: tuple = None
    axis: int = None


def annihilation(n_trunc):
    """Single-mode lowering operator with <n-1|a|n> = sqrt(n)."""
    if n_trunc < 2:
        raise HilbertSpaceError(f"n_trunc must be >= 2, got {n_trunc}")
    return np.diag(np.sqrt(np.arange(1, n_trunc, dtype=float)), 1).astype(complex)


def number_operator(n_trunc):
    return np.diag(np.arange(n_trunc, dtype=float)).astype(complex)


def atom_operators():
    """(S_z, S_+, S_-) in the (ground, excited) basis, S_z = diag(-1/2, +1/2)."""
    sz = np.diag([-0.5, 0.5]).astype(complex)
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    return sz, sp, sp.conj().T.copy()


def embed(op, factor, spec):
    if factor not in FACTORS:
        raise HilbertSpaceError(f"unknown factor {factor!r}; expected one of {FACTORS}")
    return embed_axis(op, FACTORS.index(factor), spec.dims, label=factor)


def embed_axis(op, axis, dims, label=None):
    """Place ``op`` on tensor factor ``axis`` of a product space with ``dims``."""
    op = as_matrix(op)
    dims = tuple(dims)
    d = dims[axis]
    if op.shape != (d, d):
        raise HilbertSpaceError(f"operator shape {op.shape} does not match factor dimension {d}")
    full = np.ones((1, 1), dtype=complex)
    for i, n in enumerate(dims):
        full = kron(full, op if i == axis else np.eye(n, dtype=complex))
    return EmbeddedOperator(full, label or f"axis{axis}", op.copy(), dims, axis)


def identity(spec):
    return EmbeddedOperator(np.eye(spec.dim, dtype=complex), "identity")


def total_photon_numbers(spec):
    """n1 + n2 for every full-space basis index."""
    n = np.arange(spec.n_trunc)
    tot = (n[:, None] + n[None, :]).ravel()
    return np.tile(tot, 2)


def safe_projector(spec, max_total):
    """Diagonal projector onto n1 + n2 <= max_total."""
    return np.diag((total_photon_numbers(spec) <= max_total).astype(complex))


def coherent_amplitudes(alpha, n_trunc):
    n = np.arange(n_trunc)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    alpha = complex(alpha)
    if alpha == 0:
        c = np.zeros(n_trunc, dtype=complex)
        c[0] = 1.0
        return c
    mag = np.exp(-abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * log_fact)
    return mag * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha, n_trunc, return_leakage=False):
    """Truncated, renormalised coherent state |alpha>.

    Requires |alpha|^2 <= N/4.  With ``return_leakage`` the Poisson weight lost
    to truncation (before renormalising) is returned as well.
    """
    if n_trunc < 2:
        raise HilbertSpaceError(f"n_trunc must be >= 2, got {n_trunc}")
    if abs(alpha) ** 2 > n_trunc / 4:
        need = math.ceil(4 * abs(alpha) ** 2)
        raise HilbertSpaceError(
            f"leakage guard |alpha|^2 <= N/4 violated: |alpha|^2 = {abs(alpha) ** 2:.4g}, "
            f"N = {n_trunc}; need n_trunc >= {need}"
        )
    c = coherent_amplitudes(alpha, n_trunc)
    norm2 = float(np.sum(np.abs(c) ** 2))
    psi = c / math.sqrt(norm2)
    if return_leakage:
        return psi, 1.0 - norm2
    return psi


def fock_state(n, n_trunc):
    if not 0 <= n < n_trunc:
        raise HilbertSpaceError(f"Fock level {n} outside truncation 0..{n_trunc - 1}")
    psi = np.zeros(n_trunc, dtype=complex)
    psi[n] = 1.0
    return psi


def pure_density(psi, tol=1e-10):
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise HilbertSpaceError(f"state vector is not normalised: |psi| = {norm:.12g}")
    return np.outer(psi, psi.conj())


def _resolve_keep(keep, n_factors):
    if isinstance(keep, (str, int)):
        keep = [keep]
    idx = []
    for k in keep:
        if isinstance(k, str):
            if k not in FACTORS:
                raise HilbertSpaceError(f"unknown factor {k!r}")
            k = FACTORS.index(k)
        if not 0 <= k < n_factors:
            raise HilbertSpaceError(f"factor index {k} out of range")
        idx.append(k)
    return sorted(set(idx))


def partial_trace(rho, keep, spec):
    """Reduced density matrix over the factors in ``keep``.

    ``spec`` is a :class:`SpaceSpec` or an explicit tuple of factor dimensions;
    ``keep`` holds factor names (for a SpaceSpec) or positional indices.
    """
    dims = tuple(spec.dims) if isinstance(spec, SpaceSpec) else tuple(spec)
    rho = as_matrix(rho)
    d = int(np.prod(dims))
    if rho.shape != (d, d):
        raise HilbertSpaceError(f"density shape {rho.shape} does not match dimensions {dims}")
    keep = _resolve_keep(keep, len(dims))
    n = len(dims)
    t = rho.reshape(dims + dims)
    letters = "abcdefghij"
    row = list(letters[:n])
    col = [letters[n + i] if i in keep else letters[i] for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep]))
    return red.reshape(dk, dk)


__all__ = [
    "FACTORS",
    "HilbertSpaceError",
    "SpaceSpec",
    "EmbeddedOperator",
    "annihilation",
    "number_operator",
    "atom_operators",
    "embed",
    "embed_axis",
    "identity",
    "total_photon_numbers",
    "safe_projector",
    "coherent_amplitudes",
    "coherent_state",
    "fock_state",
    "pure_density",
    "partial_trace",
    "LinalgError",
]
