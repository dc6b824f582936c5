"""Expectation values in both frames.

An operator O on the original system becomes, after the beam-splitter frame
change, a sum of products f_k * (atom factor) (x) (mode-1 factor) (x)
(mode-2 factor).  Its mean then only needs the two reduced density matrices:

    <O> = sum_k f_k Tr[rho1 (atom_k (x) mode1_k)] Tr[rho2 mode2_k]

Operators are written in a small text grammar: terms joined by standalone
``+`` / ``-`` tokens, each term a whitespace separated product of an optional
complex coefficient and tokens from ``a1 a1d a2 a2d sp sm sz``.  For example
``"a1d a1 + a2d a2"`` or ``"0.5 sp a1 + 0.5 a1d sm"``.
"""
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional

import numpy as np

from .beamsplitter import from_transformed_frame, mode_rotation
from .hilbert import annihilation, atom_operators, embed
from .linalg import as_matrix, kron

MODE_TOKENS = {"a1": (0, False), "a1d": (0, True), "a2": (1, False), "a2d": (1, True)}
ATOM_TOKENS = ("sp", "sm", "sz")
MAX_MODE_DEGREE = 2


class OpSpecError(ValueError):
    pass


class DegreeError(OpSpecError):
    """Term has more mode factors than the symbolic decomposition handles."""


def _coefficient(tok):
    try:
        return complex(tok.strip("()") if tok.startswith("(") and tok.endswith(")") else tok)
    except ValueError:
        return None


def parse_op_spec(text):
    """Parse an operator string into a list of ``(coefficient, tokens)`` terms."""
    if not isinstance(text, str) or not text.strip():
        raise OpSpecError("empty operator specification")
    terms = []
    sign, coef, toks = 1.0, 1.0 + 0j, []
    seen = signed = False
    for tok in text.split():
        if tok in ("+", "-"):
            if seen:
                terms.append((sign * coef, tuple(toks)))
                coef, toks, seen = 1.0 + 0j, [], False
            elif signed or terms:
                raise OpSpecError(f"misplaced sign in {text!r}")
            sign = -1.0 if tok == "-" else 1.0
            signed = True
            continue
        seen = True
        signed = False
        if tok in MODE_TOKENS or tok in ATOM_TOKENS:
            toks.append(tok)
            continue
        c = _coefficient(tok)
        if c is None:
            raise OpSpecError(f"unknown token {tok!r} in {text!r}")
        coef *= c
    if not seen:
        raise OpSpecError(f"operator specification {text!r} ends with a sign")
    terms.append((sign * coef, tuple(toks)))
    return terms


def _local_matrices(n_trunc):
    a = annihilation(n_trunc)
    sz, sp_, sm = atom_operators()
    return {"a": a, "ad": a.conj().T, "sz": sz, "sp": sp_, "sm": sm}


def _mode_matrix(tokens, n_trunc, loc):
    m = np.eye(n_trunc, dtype=complex)
    for t in tokens:
        m = m @ (loc["ad"] if t.endswith("d") else loc["a"])
    return m


def _atom_matrix(tokens, loc):
    m = np.eye(2, dtype=complex)
    for t in tokens:
        m = m @ loc[t]
    return m


def operator_matrix(op_spec, spec):
    """Full-space matrix of an operator string (original frame)."""
    terms = parse_op_spec(op_spec) if isinstance(op_spec, str) else op_spec
    loc = _local_matrices(spec.n_trunc)
    emb = {
        "a1": embed(loc["a"], "mode1", spec).matrix,
        "a1d": embed(loc["ad"], "mode1", spec).matrix,
        "a2": embed(loc["a"], "mode2", spec).matrix,
        "a2d": embed(loc["ad"], "mode2", spec).matrix,
    }
    for t in ATOM_TOKENS:
        emb[t] = embed(loc[t], "atom", spec).matrix
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for coef, toks in terms:
        m = np.eye(spec.dim, dtype=complex)
        for t in toks:
            m = m @ emb[t]
        out += coef * m
    return out


@dataclass
class ProductObservable:
    """sum_k coef_k * atom_k (x) mode1_k (x) mode2_k."""

    terms: list
    label: str = ""

    def assemble(self):
        return sum(c * kron(at, kron(m1, m2)) for c, at, m1, m2 in self.terms)

    def __len__(self):
        return len(self.terms)


def _split(tokens):
    atom, m1, m2 = [], [], []
    for t in tokens:
        if t in ATOM_TOKENS:
            atom.append(t)
        elif MODE_TOKENS[t][0] == 0:
            m1.append(t)
        else:
            m2.append(t)
    return tuple(atom), tuple(m1), tuple(m2)


def transform_decompose(op_spec, ft, label=None):
    """Decompose U^dag O U into products over the two reduced subsystems.

    Each mode token is replaced by its rotated combination (see
    :func:`~bimodal_jcm.beamsplitter.mode_rotation`), the products are expanded
    and equal factor patterns are collected.
    """
    terms = parse_op_spec(op_spec) if isinstance(op_spec, str) else op_spec
    r = mode_rotation(ft.gamma)
    names = (("a1", "a2"), ("a1d", "a2d"))
    collected = {}
    for coef, toks in terms:
        degree = sum(t in MODE_TOKENS for t in toks)
        if degree > MAX_MODE_DEGREE:
            raise DegreeError(f"term {' '.join(toks)!r} has mode degree {degree} > {MAX_MODE_DEGREE}; "
                              "use expect_full on the reconstructed state instead")
        choices = []
        for t in toks:
            if t in MODE_TOKENS:
                i, dag = MODE_TOKENS[t]
                row = r[i].conj() if dag else r[i]
                choices.append([(row[j], names[dag][j]) for j in range(2) if row[j] != 0])
            else:
                choices.append([(1.0, t)])
        for combo in product(*choices):
            f = coef
            for c, _ in combo:
                f = f * c
            key = _split(tuple(t for _, t in combo))
            collected[key] = collected.get(key, 0) + f
    loc = _local_matrices(ft.spec.n_trunc)
    scale = max((abs(v) for v in collected.values()), default=0.0)
    out = []
    for (atom, m1, m2), f in collected.items():
        if abs(f) <= 1e-15 * scale:
            continue
        out.append((complex(f), _atom_matrix(atom, loc), _mode_matrix(m1, ft.spec.n_trunc, loc),
                    _mode_matrix(m2, ft.spec.n_trunc, loc)))
    return ProductObservable(out, label or (op_spec if isinstance(op_spec, str) else ""))


def expect_full(rho, op):
    """Tr[rho O]."""
    rho, op = as_matrix(rho), as_matrix(op)
    if rho.shape != op.shape:
        raise ValueError(f"shape mismatch: {rho.shape} vs {op.shape}")
    return complex(np.sum(rho * op.T))


def expect_reduced(rho1, rho2, po):
    rho1, rho2 = as_matrix(rho1), as_matrix(rho2)
    total = 0j
    for c, at, m1, m2 in po.terms:
        g1 = kron(at, m1)
        if g1.shape != rho1.shape or m2.shape != rho2.shape:
            raise ValueError(f"factor shapes {g1.shape}, {m2.shape} do not match {rho1.shape}, {rho2.shape}")
        total += c * np.sum(rho1 * g1.T) * np.sum(rho2 * m2.T)
    return complex(total)


def purity(rho):
    rho = as_matrix(rho)
    return complex(np.sum(rho * rho.T))


@dataclass
class Observable:
    """A named quantity with a full-state and a reduced-state evaluator.

    ``matrix`` is the original-frame operator and ``product`` its
    transformed-frame decomposition; both are ``None`` for purity.
    """

    name: str
    full: Callable
    reduced: Callable
    matrix: Optional[np.ndarray] = None
    product: Optional[ProductObservable] = None


def operator_observable(name, op_spec, ft):
    m = operator_matrix(op_spec, ft.spec)
    po = transform_decompose(op_spec, ft, label=name)
    return Observable(name, lambda r: expect_full(r, m), lambda r1, r2: expect_reduced(r1, r2, po), m, po)


def _tilde_observable(name, op_spec, ft):
    # op_spec is read in the transformed frame; the lab operator is U X~ U^dag
    po = ProductObservable([(c, *_factors(toks, ft.spec.n_trunc)) for c, toks in parse_op_spec(op_spec)], name)
    m = from_transformed_frame(ft, po.assemble())
    return Observable(name, lambda r: expect_full(r, m), lambda r1, r2: expect_reduced(r1, r2, po), m, po)


def _factors(tokens, n_trunc):
    loc = _local_matrices(n_trunc)
    atom, m1, m2 = _split(tokens)
    return _atom_matrix(atom, loc), _mode_matrix(m1, n_trunc, loc), _mode_matrix(m2, n_trunc, loc)


BUILTIN_SPECS = {
    "sz": "sz",
    "n1": "a1d a1",
    "n2": "a2d a2",
    "ntot": "a1d a1 + a2d a2",
    "s_plus_a1": "sp a1",
}
TILDE_SPECS = {
    "n1_tilde": "a1d a1",
    "n2_tilde": "a2d a2",
}
DEFAULT_OBSERVABLES = ("sz", "n1", "n2", "ntot", "purity")


def registry(ft):
    """All named observables for the transform ``ft``."""
    reg = {name: operator_observable(name, s, ft) for name, s in BUILTIN_SPECS.items()}
    reg.update({name: _tilde_observable(name, s, ft) for name, s in TILDE_SPECS.items()})
    reg["purity"] = Observable("purity", purity, lambda r1, r2: purity(r1) * purity(r2))
    return reg


def resolve_observables(names, ft):
    """Map registry names and raw operator strings to :class:`Observable` objects."""
    reg = registry(ft)
    out = {}
    for n in names:
        out[n] = reg[n] if n in reg else operator_observable(n, n, ft)
    return out


__all__ = [
    "OpSpecError",
    "DegreeError",
    "parse_op_spec",
    "operator_matrix",
    "ProductObservable",
    "transform_decompose",
    "expect_full",
    "expect_reduced",
    "purity",
    "Observable",
    "operator_observable",
    "registry",
    "resolve_observables",
    "DEFAULT_OBSERVABLES",
]
