"""Acceptance criteria, one test each.

Every test appends a PASS/FAIL line to the "acceptance criteria" section of
the pytest terminal summary.  Criteria 1, 2, 4 and 8 are known to fail as
stated; see the README for why.
"""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from bimodal_jcm.beamsplitter import build_transform, check_factorization, conjugate_operator, to_transformed_frame
from bimodal_jcm.cli import initial_density, main
from bimodal_jcm.config import parse_config
from bimodal_jcm.evolution import compare_routes, integrate_full, integrate_reduced, reconstruct
from bimodal_jcm.hilbert import SpaceSpec, annihilation, coherent_state, embed, fock_state, pure_density, safe_projector
from bimodal_jcm.linalg import commutator
from bimodal_jcm.model import SystemParams, build_hamiltonian, dissipator
from bimodal_jcm.observables import DEFAULT_OBSERVABLES, expect_full, registry, resolve_observables
from conftest import ACCEPTANCE_LINES, random_density

SCENARIO = "params: {{g1: 1.0, g2: 0.5{}}}\ninitial: {{atom: ground, alpha: [1.0, 0.0], mode2: {{fock: 0}}}}\n"
# U^dag rho0 U for the truncated coherent state misses exact factorization by
# ~4e-5; the check is loosened only so the routes can be run and measured
MEASURE_FACTORIZATION_TOL = 1e-4


def report(number, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def scenario(extra="", kappa=None):
    cfg = parse_config(SCENARIO.format("" if kappa is None else f", kappa: {kappa}") + extra)
    ft = build_transform(cfg.params.gamma, cfg.params.spec)
    return cfg, ft


def run_scenario(extra="", kappa=None):
    cfg, ft = scenario(extra, kappa)
    return compare_routes(initial_density(cfg), cfg.params, cfg.grid, resolve_observables(DEFAULT_OBSERVABLES, ft),
                          cfg.store_stride, MEASURE_FACTORIZATION_TOL, cfg.comparison_tol,
                          rotating=cfg.rotating_frame)


@pytest.fixture(scope="module")
def lossy_run():
    return run_scenario()


@pytest.fixture(scope="module")
def lossless_run():
    return run_scenario(kappa=0.0)


@pytest.mark.slow
def test_criterion_1_route_agreement(lossy_run):
    cfg, ft = scenario()
    *_, residual, ok = check_factorization(to_transformed_frame(ft, initial_density(cfg)), cfg.params.spec,
                                           cfg.factorization_tol)
    d = lossy_run.max_frobenius_distance
    passed = d <= 1e-6
    report(1, passed, f"max route distance {d:.3e} (tol 1e-6), distance at t=0 {lossy_run.frobenius_distance[0]:.3e}, "
                      f"factorization residual {residual:.3e}, full route {lossy_run.wall_time_full_s:.1f}s")
    assert passed


@pytest.mark.slow
def test_criterion_2_lossless_consistency(lossless_run):
    d = lossless_run.max_frobenius_distance
    pur = np.abs(lossless_run.full.values["purity"] - 1).max()
    passed = d <= 1e-7 and pur <= 1e-8
    report(2, passed, f"max route distance {d:.3e} (tol 1e-7), full-route purity drift {pur:.3e} (tol 1e-8)")
    assert passed


def random_config_text(rng):
    g1, g2 = rng.uniform(-1.5, 1.5, 2)
    g_eff = math.hypot(g1, g2)
    n = int(rng.integers(3, 6))
    omega, omega0 = rng.uniform(0.5, 10, 2)
    kappa = rng.uniform(0, 0.5)
    alpha = complex(*rng.normal(size=2)) * 0.5 * math.sqrt(n / 4) / 1.5
    if abs(alpha) ** 2 > n / 4:
        alpha *= math.sqrt(n / 4) / abs(alpha) * 0.99
    atom = "excited" if rng.random() < 0.5 else "ground"
    mode2 = f"{{fock: {int(rng.integers(0, 2))}}}" if rng.random() < 0.5 else \
        f"{{coherent: [{0.3 * rng.normal():.6f}, {0.3 * rng.normal():.6f}]}}"
    t_end = 5 / g_eff
    # valid configs respect the step guard dt * max rate <= 0.1
    n_steps = max(1000, math.ceil(t_end * max(omega, omega0, g_eff, kappa) / 0.1 / 25) * 25)
    return f"""
params: {{g1: {g1:.6f}, g2: {g2:.6f}, omega: {omega:.6f}, omega0: {omega0:.6f}, kappa: {kappa:.6f}, n_trunc: {n}}}
initial: {{atom: {atom}, alpha: [{alpha.real:.6f}, {alpha.imag:.6f}], mode2: {mode2}}}
grid: {{t_end: {t_end:.6f}, n_steps: {n_steps}, store_stride: 25}}
mode: full
"""


def test_criterion_3_trace_and_positivity():
    rng = np.random.default_rng(3)
    worst_tr = worst_diss = 0.0
    worst_eig = np.inf
    for _ in range(50):
        cfg = parse_config(random_config_text(rng))
        gens = build_hamiltonian(cfg.params, rotating=cfg.rotating_frame)
        tr = integrate_full(initial_density(cfg), gens, cfg.grid, store_stride=cfg.store_stride)
        worst_tr = max(worst_tr, tr.trace_err.max())
        worst_eig = min(worst_eig, tr.min_eig.min())
        for rho in tr.states:
            worst_diss = max(worst_diss, abs(np.trace(dissipator(rho, gens.jump_ops, gens.kappa))))
    passed = worst_tr <= 1e-8 and worst_eig >= -1e-8 and worst_diss <= 1e-12
    report(3, passed, f"worst |Tr rho - 1| {worst_tr:.3e}, worst min eigenvalue {worst_eig:.3e}, "
                      f"worst |Tr dissipator| {worst_diss:.3e} over 50 configs")
    assert passed


def test_criterion_4_transformation_identities():
    rng = np.random.default_rng(4)
    n = 8
    spec = SpaceSpec(n)
    a = annihilation(n)
    a1, a2 = embed(a, "mode1", spec).matrix, embed(a, "mode2", spec).matrix
    proj = safe_projector(spec, n - 2)
    stated = corrected = ham = comm = 0.0
    for _ in range(20):
        gamma = float(rng.uniform(-math.pi, math.pi))
        c, s = math.cos(gamma), math.sin(gamma)
        ft = build_transform(gamma, spec)
        b1, b2 = conjugate_operator(ft, a1), conjugate_operator(ft, a2)
        # the identity exactly as stated: U^dag a1 U = c a1 + s a2, U^dag a2 U = -s a1 + c a2
        stated = max(stated, np.abs(proj @ (b1 - c * a1 - s * a2) @ proj).max(),
                     np.abs(proj @ (b2 + s * a1 - c * a2) @ proj).max())
        corrected = max(corrected, np.abs(proj @ (b1 - c * a1 + s * a2) @ proj).max(),
                        np.abs(proj @ (b2 - s * a1 - c * a2) @ proj).max())
        g = np.abs(rng.normal(size=2)) + 0.1
        sign = rng.choice([-1, 1], 2)
        p = SystemParams(*rng.uniform(0.5, 3, 2), sign[0] * g[0], sign[1] * g[1], 0.1, n)
        ftp = build_transform(p.gamma, spec)
        gen = build_hamiltonian(p, "transformed")
        h1, h2 = (part.matrix for part in gen.parts)
        h = build_hamiltonian(p).hamiltonian.matrix
        ham = max(ham, np.abs(proj @ (conjugate_operator(ftp, h) - h1 - h2) @ proj).max())
        comm = max(comm, np.abs(commutator(h1, h2)).max())
    passed = stated <= 1e-10 and ham <= 1e-9 and comm == 0.0
    report(4, passed, f"stated mode rotation {stated:.3e} (tol 1e-10; with sin terms sign-flipped {corrected:.3e}), "
                      f"Hamiltonian identity {ham:.3e} (tol 1e-9), max |[H1~,H2~]| {comm:.1e}")
    assert passed


def test_criterion_5_damped_oscillator():
    cfg, ft = scenario()
    p = cfg.params
    n = p.n_trunc
    beta = 1.0 * math.sin(p.gamma)
    r1 = pure_density(np.kron([1, 0], fock_state(0, n)))
    _, tr2 = integrate_reduced(r1, pure_density(coherent_state(beta, n)), p, cfg.grid, cfg.store_stride,
                               rotating=cfg.rotating_frame)
    num = np.diag(np.arange(n)).astype(complex)
    n_t = np.array([expect_full(r, num).real for r in tr2.states])
    dev = np.abs(n_t - beta**2 * np.exp(-2 * p.kappa * tr2.times)).max()
    passed = dev <= 1e-6
    report(5, passed, f"max |<n2~>(t) - |beta|^2 exp(-2kt)| = {dev:.3e} (tol 1e-6)")
    assert passed


def single_excitation_oracle(g, kappa, times):
    # amplitudes of |e,0>, |g,1> under the no-jump evolution at resonance; the
    # jump only feeds |g,0>, which never couples back
    def f(t, y):
        ce, cg = y[0] + 1j * y[1], y[2] + 1j * y[3]
        dce = -1j * g * cg
        dcg = -1j * g * ce - kappa * cg
        pg0 = 2 * kappa * abs(cg) ** 2
        return [dce.real, dce.imag, dcg.real, dcg.imag, pg0]
    sol = solve_ivp(f, (times[0], times[-1]), [1, 0, 0, 0, 0], t_eval=times, method="DOP853",
                    rtol=1e-12, atol=1e-14)
    pe = sol.y[0] ** 2 + sol.y[1] ** 2
    pg1 = sol.y[2] ** 2 + sol.y[3] ** 2
    return pe, pg1, sol.y[4]


def test_criterion_6_single_excitation():
    cfg, ft = scenario()
    p = cfg.params
    n = p.n_trunc
    sz = np.diag([-0.5, 0.5]).astype(complex)
    r1 = pure_density(np.kron([0, 1], fock_state(0, n)))
    tr1, _ = integrate_reduced(r1, pure_density(fock_state(0, n)), p, cfg.grid, cfg.store_stride,
                               rotating=cfg.rotating_frame)
    pe_reduced = np.array([expect_full(r, np.kron(sz, np.eye(n))).real + 0.5 for r in tr1.states])
    pe, pg1, pg0 = single_excitation_oracle(p.g_eff, p.kappa, tr1.times)
    dev = np.abs(pe_reduced - pe).max()
    closure = np.abs(pe + pg1 + pg0 - 1).max()
    passed = dev <= 1e-6
    report(6, passed, f"max |P_e - oracle| = {dev:.3e} (tol 1e-6), oracle population closure {closure:.1e}")
    assert passed


def test_criterion_7_expectation_pipeline():
    rng = np.random.default_rng(7)
    n = 8
    spec = SpaceSpec(n)
    k1, k2 = 4, 3  # factor supports keep n1 + n2 <= N - 3: no truncation leakage
    worst = 0.0
    for _ in range(100):
        ft = build_transform(float(rng.uniform(-math.pi, math.pi)), spec)
        r1 = np.zeros((2 * n, 2 * n), dtype=complex)
        idx = np.concatenate([np.arange(k1), n + np.arange(k1)])
        r1[np.ix_(idx, idx)] = random_density(rng, 2 * k1, int(rng.integers(1, 2 * k1 + 1)))
        r2 = np.zeros((n, n), dtype=complex)
        r2[:k2, :k2] = random_density(rng, k2, int(rng.integers(1, k2 + 1)))
        rho = reconstruct(ft, r1, r2).matrix
        for ob in registry(ft).values():
            worst = max(worst, abs(ob.reduced(r1, r2) - ob.full(rho)))
    passed = worst <= 1e-8
    report(7, passed, f"max |reduced - full| over 100 states x {len(registry(ft))} observables = {worst:.3e} (tol 1e-8)")
    assert passed


@pytest.mark.slow
def test_criterion_8_convergence_order(lossy_run):
    fine = run_scenario("grid: {n_steps: 8000, store_stride: 20}\n")
    d1, d2 = lossy_run.max_frobenius_distance, fine.max_frobenius_distance
    ratio = d1 / d2
    passed = ratio >= 12
    report(8, passed, f"route distance {d1:.3e} at 4000 steps, {d2:.3e} at 8000 steps, ratio {ratio:.2f} (need >= 12)")
    assert passed


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(SCENARIO.format(", n_trunc: 6").replace("alpha: [1.0, 0.0]", "alpha: [0.5, 0.0]")
                   + "grid: {n_steps: 2000, store_stride: 20}\nmode: full\n")
    codes = [main(["--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    same = (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    passed = same and codes[0] == codes[1]
    report(9, passed, f"trajectory.csv byte-identical: {same}, exit codes {codes}")
    assert passed
