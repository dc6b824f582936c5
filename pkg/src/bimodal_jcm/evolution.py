"""Fixed-step RK4 integration of the master equation, full and reduced.

The full route integrates the three-factor density matrix directly.  The
reduced route integrates the atom (x) collective-mode-1 problem and the free
damped collective mode 2 separately and rebuilds rho = U (rho1 (x) rho2) U^dag.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import time
import warnings

import numpy as np

from .beamsplitter import build_transform, check_factorization, from_transformed_frame, to_transformed_frame
from .hilbert import SpaceSpec, total_photon_numbers
from .linalg import as_matrix, frobenius_distance, hermiticity_error, kron
from .model import CompiledRHS, build_hamiltonian, build_subsystem_generators

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
LEAKAGE_TOL = 1e-6
STABILITY_LIMIT = 0.1


class IntegrationError(RuntimeError):
    """A step produced non-finite entries."""

    def __init__(self, message, last_good_time):
        super().__init__(message)
        self.last_good_time = last_good_time


class FactorizationRefused(ValueError):
    """The transformed initial state is not a product, so the reduction does not apply."""

    def __init__(self, residual, tol):
        super().__init__(
            f"transformed initial state is not factorized (residual {residual:.3e} > tol {tol:.1e}); "
            "the reduction assumes rho~(0) = rho~1(0) (x) rho~2(0). Run in full mode instead."
        )
        self.residual = residual
        self.tol = tol


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n_steps: int
    t_start: float = 0.0

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.n_steps

    def time(self, step):
        return self.t_start + step * self.dt

    def check_stability(self, params):
        """Warn when dt * max(omega, omega0, g_eff, kappa) exceeds 0.1; returns the product."""
        x = self.dt * params.max_rate()
        if x > STABILITY_LIMIT:
            warnings.warn(f"dt * max rate = {x:.3g} exceeds {STABILITY_LIMIT}; RK4 accuracy not guaranteed")
        return x


@dataclass(frozen=True)
class DensityState:
    matrix: np.ndarray
    frame: str = "original"
    factors: tuple = ()


@dataclass
class Trajectory:
    frame: str
    times: np.ndarray
    trace_err: np.ndarray
    herm_err: np.ndarray
    min_eig: np.ndarray
    leakage: np.ndarray
    states: np.ndarray = None
    values: dict = field(default_factory=dict)

    @property
    def failed(self):
        return bool(np.any(self.trace_err > TRACE_TOL) or np.any(self.min_eig < -POSITIVITY_TOL))

    def __len__(self):
        return len(self.times)


def _sample_steps(n_steps, stride):
    if stride < 1:
        raise ValueError(f"store_stride must be >= 1, got {stride}")
    steps = list(range(0, n_steps + 1, stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def rk4_evolve(rho0, rhs, grid, frame, leakage_mask, store_stride=1, keep_states=True, observers=None):
    """Integrate d(rho)/dt = rhs(rho) with classical RK4 on ``grid``.

    After each step rho is replaced by (rho + rho^dag) / 2.  The trace is never
    renormalised so its drift stays visible in the diagnostics.  ``observers``
    maps names to callables ``f(rho) -> complex`` evaluated at stored samples.
    """
    rho = np.array(as_matrix(rho0), dtype=complex, order="C")
    h = grid.dt
    steps = _sample_steps(grid.n_steps, store_stride)
    n_s = len(steps)
    observers = observers or {}
    times = np.array([grid.time(s) for s in steps])
    trace_err = np.empty(n_s)
    herm_err = np.empty(n_s)
    min_eig = np.empty(n_s)
    leak = np.empty(n_s)
    values = {k: np.empty(n_s, dtype=complex) for k in observers}
    states = np.empty((n_s,) + rho.shape, dtype=complex) if keep_states else None

    def record(i, r):
        trace_err[i] = abs(np.trace(r) - 1.0)
        herm_err[i] = hermiticity_error(r)
        min_eig[i] = np.linalg.eigvalsh(r)[0]
        leak[i] = float(np.real(np.diagonal(r)) @ leakage_mask)
        if keep_states:
            states[i] = r
        for k, f in observers.items():
            values[k][i] = f(r)

    record(0, rho)
    nxt = 1
    # a diverging run overflows before the finiteness check catches it
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, grid.n_steps + 1):
            k1 = rhs(rho)
            k2 = rhs(rho + (0.5 * h) * k1)
            k3 = rhs(rho + (0.5 * h) * k2)
            k4 = rhs(rho + h * k3)
            k1 += 2.0 * k2
            k1 += 2.0 * k3
            k1 += k4
            rho = rho + (h / 6.0) * k1
            rho = 0.5 * (rho + rho.conj().T)
            if not np.isfinite(rho).all():
                raise IntegrationError(
                    f"non-finite density matrix at t = {grid.time(step):.6g}", grid.time(step - 1)
                )
            if nxt < n_s and step == steps[nxt]:
                record(nxt, rho)
                nxt += 1
    return Trajectory(frame, times, trace_err, herm_err, min_eig, leak, states, values)


def _check_density(rho, dim, tol=1e-10):
    rho = as_matrix(rho)
    if rho.shape != (dim, dim):
        raise ValueError(f"density shape {rho.shape}, expected ({dim}, {dim})")
    if hermiticity_error(rho) > 1e-8:
        raise ValueError("initial density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-8:
        raise ValueError(f"initial density matrix has trace {np.trace(rho).real:.12g}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -tol:
        raise ValueError(f"initial density matrix has negative eigenvalue {lo:.3e}")
    return rho


def full_leakage_mask(spec):
    return (total_photon_numbers(spec) >= spec.n_trunc - 1).astype(float)


def mode_leakage_mask(n_trunc, n_before=1):
    """Population in the top Fock level of a mode that is the last tensor factor."""
    m = np.zeros(n_trunc)
    m[-1] = 1.0
    return np.tile(m, n_before)


def integrate_full(rho0, gens, grid, params=None, store_stride=1, keep_states=True, observers=None):
    """RK4 on the full three-factor master equation."""
    if isinstance(rho0, DensityState):
        rho0 = rho0.matrix
    rho0 = _check_density(rho0, gens.dim)
    n = int(round(math.sqrt(gens.dim / 2)))
    if params is not None:
        grid.check_stability(params)
    mask = full_leakage_mask(SpaceSpec(n))
    return rk4_evolve(rho0, CompiledRHS(gens), grid, gens.frame, mask, store_stride, keep_states, observers)


def integrate_reduced(rho1_0, rho2_0, params, grid, store_stride=1, keep_states=True,
                      rotating=False, parallel=False):
    """Integrate the two decoupled problems; returns (trajectory1, trajectory2)."""
    N = params.n_trunc
    rho1_0 = _check_density(rho1_0, 2 * N)
    rho2_0 = _check_density(rho2_0, N)
    grid.check_stability(params)
    g1, g2 = build_subsystem_generators(params, rotating=rotating)
    jobs = [
        (rho1_0, CompiledRHS(g1), grid, "subsystem1", mode_leakage_mask(N, 2), store_stride, keep_states),
        (rho2_0, CompiledRHS(g2), grid, "subsystem2", mode_leakage_mask(N, 1), store_stride, keep_states),
    ]
    if parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            futs = [pool.submit(rk4_evolve, *job) for job in jobs]
            return tuple(f.result() for f in futs)
    return tuple(rk4_evolve(*job) for job in jobs)


def reconstruct(ft, rho1, rho2):
    """rho = U (rho1 (x) rho2) U^dag in the original frame."""
    N = ft.spec.n_trunc
    rho1, rho2 = as_matrix(rho1), as_matrix(rho2)
    if rho1.shape != (2 * N, 2 * N) or rho2.shape != (N, N):
        raise ValueError(f"factor shapes {rho1.shape}, {rho2.shape} do not match N = {N}")
    return DensityState(from_transformed_frame(ft, kron(rho1, rho2)), "original", (2 * N, N))


def product_leakage(rho1, rho2, n_trunc):
    """Population with n1 + n2 >= N - 1 for a product of the two factors."""
    p1 = np.real(np.diagonal(rho1)).reshape(2, n_trunc).sum(axis=0)
    p2 = np.real(np.diagonal(rho2))
    tot = np.add.outer(np.arange(n_trunc), np.arange(n_trunc))
    return float(np.sum(np.outer(p1, p2)[tot >= n_trunc - 1]))


@dataclass
class ComparisonReport:
    times: np.ndarray
    frobenius_distance: np.ndarray
    per_observable_max_dev: dict
    diagnostics: dict
    wall_time_full_s: float
    wall_time_reduced_s: float
    factorization_residual: float
    tolerance: float
    full: Trajectory = None
    reduced: tuple = None
    reduced_values: dict = None

    @property
    def max_frobenius_distance(self):
        return float(np.max(self.frobenius_distance))

    @property
    def verdict(self):
        ok = self.max_frobenius_distance <= self.tolerance
        ok = ok and all(v <= self.tolerance for v in self.per_observable_max_dev.values())
        ok = ok and not self.diagnostics["any_trajectory_failed"]
        return ok and self.diagnostics["max_leakage"] <= LEAKAGE_TOL

    def to_dict(self):
        return {
            "max_frobenius_distance": self.max_frobenius_distance,
            "per_observable_max_dev": {k: float(v) for k, v in self.per_observable_max_dev.items()},
            "diagnostics": self.diagnostics,
            "wall_time_full_s": self.wall_time_full_s,
            "wall_time_reduced_s": self.wall_time_reduced_s,
            "verdict": "pass" if self.verdict else "fail",
            "factorization_residual": self.factorization_residual,
            "tolerance": self.tolerance,
            "times": [float(t) for t in self.times],
            "frobenius_distance": [float(d) for d in self.frobenius_distance],
        }


def compare_routes(rho0, params, grid, observables=None, store_stride=1, factorization_tol=1e-8,
                   comparison_tol=1e-6, rotating=False, parallel=False):
    """Run the full and the reduced route on the same grid and compare them.

    ``observables`` is a dict of :class:`~bimodal_jcm.observables.Observable`
    (see ``observables.registry``).  Raises :class:`FactorizationRefused` if
    U^dag rho0 U is not a product within ``factorization_tol``.
    """
    if isinstance(rho0, DensityState):
        rho0 = rho0.matrix
    spec = params.spec
    ft = build_transform(params.gamma, spec)
    rho_t = to_transformed_frame(ft, rho0)
    r1, r2, residual, ok = check_factorization(rho_t, spec, factorization_tol)
    if not ok:
        raise FactorizationRefused(residual, factorization_tol)
    observables = observables or {}

    t0 = time.perf_counter()
    tr1, tr2 = integrate_reduced(r1, r2, params, grid, store_stride, True, rotating, parallel)
    wall_reduced = time.perf_counter() - t0
    reduced_values = {name: np.array([ob.reduced(a, b) for a, b in zip(tr1.states, tr2.states)])
                      for name, ob in observables.items()}

    counter = iter(range(len(tr1)))

    def distance(rho):
        i = next(counter)
        return frobenius_distance(rho, reconstruct(ft, tr1.states[i], tr2.states[i]).matrix)

    obs_fns = {name: ob.full for name, ob in observables.items()}
    obs_fns["__distance__"] = distance
    gens = build_hamiltonian(params, "original", rotating=rotating)
    t0 = time.perf_counter()
    full = integrate_full(rho0, gens, grid, params, store_stride, keep_states=False, observers=obs_fns)
    wall_full = time.perf_counter() - t0
    dist = full.values.pop("__distance__").real

    devs = {name: float(np.max(np.abs(full.values[name] - reduced_values[name]))) for name in observables}
    diagnostics = {
        "worst_trace_err": float(max(full.trace_err.max(), tr1.trace_err.max(), tr2.trace_err.max())),
        "worst_min_eig": float(min(full.min_eig.min(), tr1.min_eig.min(), tr2.min_eig.min())),
        "max_leakage": float(full.leakage.max()),
        "worst_herm_err": float(max(full.herm_err.max(), tr1.herm_err.max(), tr2.herm_err.max())),
        "any_trajectory_failed": bool(full.failed or tr1.failed or tr2.failed),
        "factorization_residual": float(residual),
    }
    return ComparisonReport(full.times, dist, devs, diagnostics, wall_full, wall_reduced, float(residual),
                            comparison_tol, full, (tr1, tr2), reduced_values)


__all__ = [
    "TRACE_TOL",
    "POSITIVITY_TOL",
    "LEAKAGE_TOL",
    "IntegrationError",
    "FactorizationRefused",
    "TimeGrid",
    "DensityState",
    "Trajectory",
    "rk4_evolve",
    "integrate_full",
    "integrate_reduced",
    "reconstruct",
    "product_leakage",
    "ComparisonReport",
    "compare_routes",
]
