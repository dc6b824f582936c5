"""Run configuration: YAML document -> validated :class:`RunConfig`.

Layout (every key optional except ``params.g1`` / ``params.g2``)::

    params:     {omega, omega0, g1, g2, kappa, n_trunc}
    initial:    {atom: ground|excited, alpha: [re, im],
                 mode1: {coherent: [re, im]} | {fock: n}, mode2: ...}
    grid:       {t_end, n_steps, store_stride}
    mode:       full | reduced | compare
    observables: [sz, n1, "a1d a1 + a2d a2", ...]
    tolerances: {factorization, comparison}
    flags:      {rotating_frame}

``initial.alpha`` is shorthand for ``mode1: {coherent: alpha}``.  Defaults
scale with g_eff = sqrt(g1^2 + g2^2): omega = omega0 = 10 g_eff,
kappa = 0.1 g_eff, t_end = 10 / g_eff.

``flags.rotating_frame`` defaults to true: integrating with the excitation
number's free evolution removed keeps RK4 at the default step well inside
the trace and positivity tolerances, which the lab frame does not.
"""
from dataclasses import dataclass
import logging
import math

import yaml

from .evolution import STABILITY_LIMIT, TimeGrid
from .model import SystemParams
from .observables import DEFAULT_OBSERVABLES

log = logging.getLogger(__name__)

MODES = ("full", "reduced", "compare")
SECTIONS = {
    "params": {"omega", "omega0", "g1", "g2", "kappa", "n_trunc"},
    "initial": {"atom", "alpha", "mode1", "mode2"},
    "grid": {"t_end", "n_steps", "store_stride"},
    "tolerances": {"factorization", "comparison"},
    "flags": {"rotating_frame"},
}
TOP_LEVEL = set(SECTIONS) | {"mode", "observables"}


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ModeState:
    kind: str  # "coherent" or "fock"
    value: complex

    def to_dict(self):
        if self.kind == "fock":
            return {"fock": int(self.value.real)}
        return {"coherent": [self.value.real, self.value.imag]}


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    atom: str
    mode1: ModeState
    mode2: ModeState
    grid: TimeGrid
    store_stride: int
    mode: str
    observables: tuple
    factorization_tol: float
    comparison_tol: float
    rotating_frame: bool

    def to_dict(self):
        p = self.params
        return {
            "params": {"omega": p.omega, "omega0": p.omega0, "g1": p.g1, "g2": p.g2,
                       "kappa": p.kappa, "n_trunc": p.n_trunc},
            "initial": {"atom": self.atom, "mode1": self.mode1.to_dict(), "mode2": self.mode2.to_dict()},
            "grid": {"t_end": self.grid.t_end, "n_steps": self.grid.n_steps, "store_stride": self.store_stride},
            "mode": self.mode,
            "observables": list(self.observables),
            "tolerances": {"factorization": self.factorization_tol, "comparison": self.comparison_tol},
            "flags": {"rotating_frame": self.rotating_frame},
        }


def _number(section, key, value, integer=False):
    field = f"{section}.{key}"
    if isinstance(value, str):
        # PyYAML reads exponent literals without a dot (1e-8) as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(field, f"expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(field, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(field, f"must be finite, got {value!r}")
    return int(value) if integer else float(value)


def _complex(field, value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(field, f"complex values are written as [re, im], got {value!r}")


def _mode_state(field, value, n_trunc):
    if not isinstance(value, dict) or len(value) != 1:
        raise ConfigError(field, "expected {coherent: [re, im]} or {fock: n}")
    (kind, v), = value.items()
    if kind == "coherent":
        alpha = _complex(f"{field}.coherent", v)
        if abs(alpha) ** 2 > n_trunc / 4:
            raise ConfigError(f"{field}.coherent",
                              f"leakage guard |alpha|^2 <= N/4 violated (|alpha|^2 = {abs(alpha) ** 2:.4g}, "
                              f"N = {n_trunc}); need n_trunc >= {math.ceil(4 * abs(alpha) ** 2)}")
        return ModeState("coherent", alpha)
    if kind == "fock":
        n = _number(field, "fock", v, integer=True)
        if not 0 <= n < n_trunc:
            raise ConfigError(f"{field}.fock", f"level {n} outside 0..{n_trunc - 1}")
        return ModeState("fock", complex(n))
    raise ConfigError(field, f"unknown mode state {kind!r}")


def _section(doc, name):
    sec = doc.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "expected a mapping")
    unknown = set(sec) - SECTIONS[name]
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown key")
    return sec


def _kappa(value, default):
    if value is None:
        return default
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError("params.kappa", "give one damping constant or a pair of equal ones")
        k1, k2 = (_number("params", "kappa", v) for v in value)
        if k1 != k2:
            raise ConfigError("params.kappa", f"unequal damping constants {k1} != {k2} are not supported; "
                                              "the reduction requires equal loss on both modes")
        value = k1
    k = _number("params", "kappa", value)
    if k < 0:
        raise ConfigError("params.kappa", f"must be >= 0, got {k}")
    return k


def parse_config(text):
    """Parse and validate a YAML config string."""
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError("document", f"not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("document", "top level must be a mapping")
    unknown = set(doc) - TOP_LEVEL
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    p = _section(doc, "params")
    for key in ("g1", "g2"):
        if key not in p:
            raise ConfigError(f"params.{key}", "required")
    g1 = _number("params", "g1", p["g1"])
    g2 = _number("params", "g2", p["g2"])
    if g1 == 0 and g2 == 0:
        raise ConfigError("params.g1", "g1 and g2 cannot both be zero")
    g_eff = math.hypot(g1, g2)
    omega = _number("params", "omega", p.get("omega", 10 * g_eff))
    omega0 = _number("params", "omega0", p.get("omega0", 10 * g_eff))
    kappa = _kappa(p.get("kappa"), 0.1 * g_eff)
    n_trunc = _number("params", "n_trunc", p.get("n_trunc", 12), integer=True)
    if n_trunc < 2:
        raise ConfigError("params.n_trunc", f"must be >= 2, got {n_trunc}")
    params = SystemParams(omega, omega0, g1, g2, kappa, n_trunc)

    ini = _section(doc, "initial")
    atom = ini.get("atom", "ground")
    if atom not in ("ground", "excited"):
        raise ConfigError("initial.atom", f"expected ground or excited, got {atom!r}")
    if "alpha" in ini and "mode1" in ini:
        raise ConfigError("initial.alpha", "give either alpha or mode1, not both")
    m1 = {"coherent": ini["alpha"]} if "alpha" in ini else ini.get("mode1", {"coherent": [1.0, 0.0]})
    mode1 = _mode_state("initial.mode1", m1, n_trunc)
    mode2 = _mode_state("initial.mode2", ini.get("mode2", {"fock": 0}), n_trunc)

    gr = _section(doc, "grid")
    t_end = _number("grid", "t_end", gr.get("t_end", 10 / g_eff))
    n_steps = _number("grid", "n_steps", gr.get("n_steps", 4000), integer=True)
    stride = _number("grid", "store_stride", gr.get("store_stride", 10), integer=True)
    if t_end <= 0:
        raise ConfigError("grid.t_end", f"must be > 0, got {t_end}")
    if n_steps < 1:
        raise ConfigError("grid.n_steps", f"must be >= 1, got {n_steps}")
    if stride < 1:
        raise ConfigError("grid.store_stride", f"must be >= 1, got {stride}")
    grid = TimeGrid(t_end, n_steps)
    ratio = grid.dt * params.max_rate()
    if ratio > STABILITY_LIMIT:
        log.warning("grid: dt * max rate = %.3g exceeds %.1f", ratio, STABILITY_LIMIT)

    mode = doc.get("mode", "compare")
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {MODES}, got {mode!r}")

    obs = doc.get("observables", list(DEFAULT_OBSERVABLES))
    if not isinstance(obs, list) or not obs or not all(isinstance(o, str) for o in obs):
        raise ConfigError("observables", "expected a non-empty list of names or operator strings")
    if len(set(obs)) != len(obs):
        raise ConfigError("observables", "duplicate entries")

    tol = _section(doc, "tolerances")
    ftol = _number("tolerances", "factorization", tol.get("factorization", 1e-8))
    ctol = _number("tolerances", "comparison", tol.get("comparison", 1e-6))
    for name, v in (("factorization", ftol), ("comparison", ctol)):
        if v <= 0:
            raise ConfigError(f"tolerances.{name}", f"must be > 0, got {v}")

    flags = _section(doc, "flags")
    rot = flags.get("rotating_frame", True)
    if not isinstance(rot, bool):
        raise ConfigError("flags.rotating_frame", f"expected true/false, got {rot!r}")

    return RunConfig(params, atom, mode1, mode2, grid, stride, mode, tuple(obs), ftol, ctol, rot)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
