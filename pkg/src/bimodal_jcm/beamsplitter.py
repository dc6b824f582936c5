"""Beam-splitter frame change U = exp[gamma (a2^dag a1 - a1^dag a2)].

Conjugation convention: transformed quantities are X~ = U^dag X U.  With
this U one finds

    U^dag a1 U = cos(gamma) a1 - sin(gamma) a2
    U^dag a2 U = sin(gamma) a1 + cos(gamma) a2

which is exactly what makes gamma = atan2(g2, g1) decouple mode 2 from the
atom.  :func:`mode_rotation` returns these coefficients.
"""
from dataclasses import dataclass
import math

import numpy as np

from .hilbert import SpaceSpec, annihilation, embed, partial_trace
from .linalg import as_matrix, expm_antihermitian, frobenius_distance, kron


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class FrameTransform:
    gamma: float
    u_matrix: np.ndarray
    spec: SpaceSpec

    @property
    def u_dagger(self):
        return self.u_matrix.conj().T


def beam_splitter_generator(gamma, spec):
    a = annihilation(spec.n_trunc)
    a1 = embed(a, "mode1", spec).matrix
    a2 = embed(a, "mode2", spec).matrix
    return gamma * (a2.conj().T @ a1 - a1.conj().T @ a2)


def build_transform(gamma, spec):
    if not math.isfinite(gamma):
        raise FrameError(f"gamma must be finite, got {gamma}")
    u = expm_antihermitian(beam_splitter_generator(gamma, spec))
    return FrameTransform(float(gamma), u, spec)


def mode_rotation(gamma):
    """2x2 matrix R with U^dag a_i U = sum_j R[i, j] a_j."""
    c, s = math.cos(gamma), math.sin(gamma)
    return np.array([[c, -s], [s, c]])


def _check_full(ft, a):
    a = as_matrix(a)
    if a.shape != ft.u_matrix.shape:
        raise FrameError(f"operator shape {a.shape} does not match full space {ft.u_matrix.shape}")
    return a


def conjugate_operator(ft, a):
    """U^dag a U."""
    a = _check_full(ft, a)
    return ft.u_dagger @ a @ ft.u_matrix


def to_transformed_frame(ft, rho):
    """rho~ = U^dag rho U."""
    return conjugate_operator(ft, rho)


def from_transformed_frame(ft, rho_tilde):
    """rho = U rho~ U^dag."""
    rho_tilde = _check_full(ft, rho_tilde)
    return ft.u_matrix @ rho_tilde @ ft.u_dagger


def check_factorization(rho_tilde, spec, tol=1e-8):
    """Split rho~ into (atom (x) mode1, mode2) marginals.

    Returns ``(rho1, rho2, residual, factorized)`` where residual is the
    Frobenius distance between rho~ and rho1 (x) rho2.
    """
    rho_tilde = as_matrix(rho_tilde)
    rho1 = partial_trace(rho_tilde, ["atom", "mode1"], spec)
    rho2 = partial_trace(rho_tilde, ["mode2"], spec)
    residual = frobenius_distance(rho_tilde, kron(rho1, rho2))
    return rho1, rho2, residual, residual <= tol


__all__ = [
    "FrameError",
    "FrameTransform",
    "beam_splitter_generator",
    "build_transform",
    "mode_rotation",
    "conjugate_operator",
    "to_transformed_frame",
    "from_transformed_frame",
    "check_factorization",
]
