"""``simulate`` command line entry point.

Exit codes: 0 pass, 1 verdict fail, 2 config error, 3 precondition refusal,
4 numerical failure.
"""
import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from .beamsplitter import build_transform, check_factorization, to_transformed_frame
from .config import ConfigError, load_config
from .evolution import (
    LEAKAGE_TOL,
    POSITIVITY_TOL,
    TRACE_TOL,
    FactorizationRefused,
    IntegrationError,
    compare_routes,
    integrate_full,
    integrate_reduced,
    product_leakage,
)
from .hilbert import atom_operators, coherent_state, embed, fock_state, pure_density
from .linalg import kron, max_abs
from .model import build_hamiltonian
from .observables import OpSpecError, resolve_observables

log = logging.getLogger("bimodal_jcm")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_REFUSED, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def _mode_vector(state, n_trunc):
    if state.kind == "fock":
        return fock_state(int(state.value.real), n_trunc)
    return coherent_state(state.value, n_trunc)


def initial_density(cfg):
    """Original-frame density matrix of the configured product initial state."""
    n = cfg.params.n_trunc
    atom = np.array([1, 0] if cfg.atom == "ground" else [0, 1], dtype=complex)
    psi = kron(atom[:, None], kron(_mode_vector(cfg.mode1, n)[:, None], _mode_vector(cfg.mode2, n)[:, None]))
    return pure_density(psi.ravel())


def _excitation_number(spec):
    a = np.diag(np.arange(spec.n_trunc, dtype=float)).astype(complex)
    return (embed(a, "mode1", spec).matrix + embed(a, "mode2", spec).matrix
            + embed(atom_operators()[0], "atom", spec).matrix)


def _check_rotating(observables, spec):
    x = _excitation_number(spec)
    for name, ob in observables.items():
        if ob.matrix is not None and max_abs(ob.matrix @ x - x @ ob.matrix) > 1e-12:
            raise ConfigError("observables", f"{name!r} does not conserve excitation number, "
                                             "so it is not frame-independent under flags.rotating_frame")


def write_csv(path, times, values, trace_err, min_eig, leakage):
    names = list(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names, "trace_err", "min_eig", "leakage"])
        for i, t in enumerate(times):
            row = [t, *(values[k][i].real for k in names), trace_err[i], min_eig[i], leakage[i]]
            w.writerow([f"{float(x):.15e}" for x in row])


def _reduced_diagnostics(tr1, tr2, n_trunc):
    trace_err, min_eig, leak = [], [], []
    for r1, r2 in zip(tr1.states, tr2.states):
        trace_err.append(abs(np.trace(r1) * np.trace(r2) - 1.0))
        e1, e2 = np.linalg.eigvalsh(r1), np.linalg.eigvalsh(r2)
        min_eig.append(float(np.min(np.outer(e1, e2))))
        leak.append(product_leakage(r1, r2, n_trunc))
    return np.array(trace_err), np.array(min_eig), np.array(leak)


def _diagnostics_ok(trace_err, min_eig):
    return bool(np.all(trace_err <= TRACE_TOL) and np.all(min_eig >= -POSITIVITY_TOL))


def run(cfg, out_dir, mode=None):
    """Execute a validated config, write outputs into ``out_dir``, return the exit code."""
    mode = mode or cfg.mode
    os.makedirs(out_dir, exist_ok=True)
    params = cfg.params
    spec = params.spec
    ft = build_transform(params.gamma, spec)
    try:
        observables = resolve_observables(cfg.observables, ft)
        if cfg.rotating_frame:
            _check_rotating(observables, spec)
    except (OpSpecError, ConfigError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    rho0 = initial_density(cfg)
    traj_path = os.path.join(out_dir, "trajectory.csv")

    try:
        if mode == "full":
            gens = build_hamiltonian(params, "original", rotating=cfg.rotating_frame)
            tr = integrate_full(rho0, gens, cfg.grid, params, cfg.store_stride, keep_states=False,
                                observers={k: ob.full for k, ob in observables.items()})
            write_csv(traj_path, tr.times, tr.values, tr.trace_err, tr.min_eig, tr.leakage)
            ok = not tr.failed
            log.info("full run finished; diagnostics %s", "ok" if ok else "FAILED")
            return EXIT_PASS if ok else EXIT_FAIL

        if mode == "reduced":
            r1, r2, residual, factorized = check_factorization(to_transformed_frame(ft, rho0), spec,
                                                               cfg.factorization_tol)
            if not factorized:
                raise FactorizationRefused(residual, cfg.factorization_tol)
            tr1, tr2 = integrate_reduced(r1, r2, params, cfg.grid, cfg.store_stride,
                                         rotating=cfg.rotating_frame, parallel=True)
            values = {k: np.array([ob.reduced(a, b) for a, b in zip(tr1.states, tr2.states)])
                      for k, ob in observables.items()}
            te, me, lk = _reduced_diagnostics(tr1, tr2, params.n_trunc)
            write_csv(traj_path, tr1.times, values, te, me, lk)
            ok = _diagnostics_ok(te, me)
            log.info("reduced run finished; diagnostics %s", "ok" if ok else "FAILED")
            return EXIT_PASS if ok else EXIT_FAIL

        rep = compare_routes(rho0, params, cfg.grid, observables, cfg.store_stride, cfg.factorization_tol,
                             cfg.comparison_tol, rotating=cfg.rotating_frame)
    except FactorizationRefused as exc:
        log.error("refused: %s", exc)
        return EXIT_REFUSED
    except IntegrationError as exc:
        log.error("integration failed: %s (last good time %.6g)", exc, exc.last_good_time)
        return EXIT_NUMERICAL

    full = rep.full
    write_csv(traj_path, full.times, full.values, full.trace_err, full.min_eig, full.leakage)
    tr1, tr2 = rep.reduced
    te, me, lk = _reduced_diagnostics(tr1, tr2, params.n_trunc)
    write_csv(os.path.join(out_dir, "trajectory_reduced.csv"), tr1.times, rep.reduced_values, te, me, lk)
    report = rep.to_dict()
    report["config"] = cfg.to_dict()
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    if rep.diagnostics["max_leakage"] > LEAKAGE_TOL:
        log.warning("truncation leakage %.3e exceeds %.0e; comparison is void", rep.diagnostics["max_leakage"],
                    LEAKAGE_TOL)
    log.info("compare: max Frobenius distance %.3e, verdict %s (full %.2fs, reduced %.2fs)",
             rep.max_frobenius_distance, report["verdict"], rep.wall_time_full_s, rep.wall_time_reduced_s)
    return EXIT_PASS if rep.verdict else EXIT_FAIL


def build_parser():
    ap = argparse.ArgumentParser(prog="simulate", description="Dissipative two-mode Jaynes-Cummings simulator.")
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--mode", choices=("full", "reduced", "compare"), help="overrides the config's mode")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_CONFIG
    log.info("effective config: %s", json.dumps(cfg.to_dict()))
    t0 = time.perf_counter()
    code = run(cfg, args.out, args.mode)
    log.info("done in %.2fs, exit %d", time.perf_counter() - t0, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
