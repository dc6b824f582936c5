"""Hamiltonians, dissipators and Liouville right-hand sides.

Two frames are supported.  The original one carries the two physical cavity
modes coupled to the atom with strengths g1, g2.  The transformed one is the
beam-splitter frame in which the atom only talks to a single collective mode
with coupling g_eff and the second collective mode is free.  Both frames lose
photons from each mode at the same rate ``kappa``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    EmbeddedOperator,
    SpaceSpec,
    annihilation,
    atom_operators,
    embed,
    embed_axis,
)
from .linalg import as_matrix, hermiticity_error, max_abs

FRAMES = ("original", "transformed")


class ModelError(ValueError):
    pass


def mixing_angle(g1, g2):
    """Beam-splitter angle gamma = atan2(g2, g1)."""
    if g1 == 0 and g2 == 0:
        raise ModelError("mixing angle undefined: both couplings are zero")
    return math.atan2(g2, g1)


def effective_coupling(g1, g2):
    return math.hypot(g1, g2)


@dataclass(frozen=True)
class SystemParams:
    omega: float
    omega0: float
    g1: float
    g2: float
    kappa: float
    n_trunc: int = 12

    def __post_init__(self):
        for name in ("omega", "omega0", "g1", "g2", "kappa"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ModelError(f"{name} must be finite, got {v}")
        if self.kappa < 0:
            raise ModelError(f"kappa must be >= 0, got {self.kappa}")
        if int(self.n_trunc) != self.n_trunc or self.n_trunc < 2:
            raise ModelError(f"n_trunc must be an integer >= 2, got {self.n_trunc}")
        if self.g1 == 0 and self.g2 == 0:
            raise ModelError("g1 and g2 cannot both be zero")

    @property
    def g_eff(self):
        return effective_coupling(self.g1, self.g2)

    @property
    def gamma(self):
        return mixing_angle(self.g1, self.g2)

    @property
    def spec(self):
        return SpaceSpec(self.n_trunc)

    def max_rate(self):
        return max(abs(self.omega), abs(self.omega0), self.g_eff, self.kappa)


@dataclass(frozen=True)
class GeneratorSet:
    """Hamiltonian and jump operators (common rate ``kappa``) for one frame.

    In the transformed frame ``parts`` holds the two commuting pieces of the
    Hamiltonian, both embedded in the full space.
    """

    hamiltonian: EmbeddedOperator
    jump_ops: tuple
    kappa: float
    frame: str
    parts: tuple = field(default=())

    @property
    def dim(self):
        return self.hamiltonian.matrix.shape[0]


def _jc_coupling(a, sp_, g):
    """g (a^dagger S_- + a S_+) for embedded a and S_+."""
    sm = sp_.conj().T
    return g * (a.conj().T @ sm + a @ sp_)


def build_hamiltonian(params, frame="original", rotating=False):
    """Generators on the full three-factor space.

    ``rotating`` removes omega * (a1^dag a1 + a2^dag a2 + S_z), the conserved
    excitation number, which commutes with every term of the model.  What is
    left is (omega0 - omega) S_z plus the couplings.
    """
    if frame not in FRAMES:
        raise ModelError(f"unknown frame {frame!r}")
    spec = params.spec
    N = params.n_trunc
    a = annihilation(N)
    sz, sp_, _ = atom_operators()
    A1 = embed(a, "mode1", spec)
    A2 = embed(a, "mode2", spec)
    SZ = embed(sz, "atom", spec).matrix
    SP = embed(sp_, "atom", spec).matrix
    n1 = A1.matrix.conj().T @ A1.matrix
    n2 = A2.matrix.conj().T @ A2.matrix
    w = params.omega
    w_atom = params.omega0 - params.omega if rotating else params.omega0
    w_mode = 0.0 if rotating else params.omega
    if frame == "original":
        h = w_mode * (n1 + n2) + w_atom * SZ
        h = h + _jc_coupling(A1.matrix, SP, params.g1) + _jc_coupling(A2.matrix, SP, params.g2)
        return GeneratorSet(EmbeddedOperator(h, "H"), (A1, A2), params.kappa, frame)
    h1 = w_mode * n1 + w_atom * SZ + _jc_coupling(A1.matrix, SP, params.g_eff)
    h2 = w_mode * n2
    parts = (EmbeddedOperator(h1, "H1~"), EmbeddedOperator(h2, "H2~"))
    return GeneratorSet(EmbeddedOperator(h1 + h2, "H~"), (A1, A2), params.kappa, frame, parts)


def build_subsystem_generators(params, rotating=False):
    """Generators of the two decoupled problems.

    Subsystem 1 lives on atom (x) collective mode 1 (dims (2, N)); subsystem 2
    on collective mode 2 alone (dims (N,)).
    """
    N = params.n_trunc
    a = annihilation(N)
    sz, sp_, _ = atom_operators()
    dims1 = (2, N)
    A1 = embed_axis(a, 1, dims1, label="mode1~")
    SZ = embed_axis(sz, 0, dims1).matrix
    SP = embed_axis(sp_, 0, dims1).matrix
    w_atom = params.omega0 - params.omega if rotating else params.omega0
    w_mode = 0.0 if rotating else params.omega
    h1 = w_mode * (A1.matrix.conj().T @ A1.matrix) + w_atom * SZ + _jc_coupling(A1.matrix, SP, params.g_eff)
    A2 = embed_axis(a, 0, (N,), label="mode2~")
    h2 = w_mode * (A2.matrix.conj().T @ A2.matrix)
    return (
        GeneratorSet(EmbeddedOperator(h1, "H1~"), (A1,), params.kappa, "subsystem1"),
        GeneratorSet(EmbeddedOperator(h2, "H2~"), (A2,), params.kappa, "subsystem2"),
    )


def _jump_matrices(jump_ops):
    return [j.matrix if isinstance(j, EmbeddedOperator) else as_matrix(j) for j in jump_ops]


def dissipator(rho, jump_ops, kappa):
    """kappa * sum_mu (2 a rho a^dag - a^dag a rho - rho a^dag a)."""
    rho = as_matrix(rho)
    out = np.zeros_like(rho)
    for a in _jump_matrices(jump_ops):
        if a.shape != rho.shape:
            raise ModelError(f"jump operator shape {a.shape} does not match density {rho.shape}")
        ad = a.conj().T
        n = ad @ a
        out += 2 * a @ rho @ ad - n @ rho - rho @ n
    return kappa * out


def liouville_rhs(rho, gens, tol=1e-8):
    """-i[H, rho] + dissipator(rho) with input checks."""
    rho = as_matrix(rho)
    h = gens.hamiltonian.matrix
    if rho.shape != h.shape:
        raise ModelError(f"density shape {rho.shape} does not match generator dimension {h.shape}")
    if hermiticity_error(rho) > tol * max(max_abs(rho), 1.0):
        raise ModelError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise ModelError(f"density matrix trace is {tr.real:.12g}, expected 1")
    return -1j * (h @ rho - rho @ h) + dissipator(rho, gens.jump_ops, gens.kappa)


def _is_lowering_shift(local):
    """True when ``local`` only has entries on its first superdiagonal."""
    off = local - np.diag(np.diag(local, 1), 1)
    return not np.any(off)


class CompiledRHS:
    """Fast Liouville right-hand side for Hermitian arguments.

    Uses rho' = K rho + (K rho)^dag + 2 kappa sum J rho J^dag with
    K = -iH - kappa sum J^dag J.  Jumps that are a single-mode lowering shift
    are applied by slicing the density tensor; anything else goes through
    sparse products.
    """

    def __init__(self, gens):
        h = gens.hamiltonian.matrix
        self.dim = h.shape[0]
        self.kappa = gens.kappa
        jm = _jump_matrices(gens.jump_ops)
        k = -1j * h
        if self.kappa:
            k = k - self.kappa * sum(j.conj().T @ j for j in jm)
        self._k = sp.csr_matrix(k)
        self._shift = []
        self._sparse = []
        if self.kappa:
            for j in gens.jump_ops:
                if isinstance(j, EmbeddedOperator) and j.local is not None and _is_lowering_shift(j.local):
                    self._shift.append(self._shift_plan(j))
                else:
                    m = j.matrix if isinstance(j, EmbeddedOperator) else as_matrix(j)
                    self._sparse.append(sp.csr_matrix(m))

    def _shift_plan(self, j):
        dims = tuple(j.dims)
        ax = j.axis
        w = np.diag(j.local, 1)
        n = len(dims)
        shape_r = [1] * (2 * n)
        shape_r[ax] = len(w)
        shape_c = [1] * (2 * n)
        shape_c[n + ax] = len(w)
        weight = 2 * self.kappa * w.reshape(shape_r) * w.conj().reshape(shape_c)
        src = [slice(None)] * (2 * n)
        dst = [slice(None)] * (2 * n)
        src[ax] = src[n + ax] = slice(1, None)
        dst[ax] = dst[n + ax] = slice(None, -1)
        return dims + dims, tuple(src), tuple(dst), weight

    def __call__(self, rho):
        x = self._k @ rho
        out = x + x.conj().T
        for shape, src, dst, weight in self._shift:
            t = rho.reshape(shape)
            o = out.reshape(shape)
            o[dst] += t[src] * weight
        for j in self._sparse:
            y = j @ rho
            out += (2 * self.kappa) * (j @ np.ascontiguousarray(y.conj().T))
        return out


__all__ = [
    "FRAMES",
    "ModelError",
    "SystemParams",
    "GeneratorSet",
    "mixing_angle",
    "effective_coupling",
    "build_hamiltonian",
    "build_subsystem_generators",
    "dissipator",
    "liouville_rhs",
    "CompiledRHS",
]
