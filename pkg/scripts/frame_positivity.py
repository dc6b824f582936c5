"""Lab frame against rotating frame for RK4 at the default step.

Prints the worst trace error, the most negative eigenvalue and the purity
drift of the full route in both frames, lossy and lossless.
"""
import numpy as np

from bimodal_jcm.cli import initial_density
from bimodal_jcm.config import parse_config
from bimodal_jcm.evolution import integrate_full
from bimodal_jcm.model import build_hamiltonian
from bimodal_jcm.observables import purity


def main():
    for kappa in ("", ", kappa: 0"):
        for rotating in (False, True):
            cfg = parse_config(f"params: {{g1: 1.0, g2: 0.5{kappa}}}\ninitial: {{alpha: [1.0, 0.0]}}\n")
            gens = build_hamiltonian(cfg.params, rotating=rotating)
            tr = integrate_full(initial_density(cfg), gens, cfg.grid, cfg.params, store_stride=40, keep_states=False,
                                observers={"purity": purity})
            drift = np.abs(tr.values["purity"] - tr.values["purity"][0]).max()
            print(f"kappa={cfg.params.kappa:.4f} {'rotating' if rotating else 'lab     '} "
                  f"trace_err={tr.trace_err.max():.2e} min_eig={tr.min_eig.min():.2e} purity_drift={drift:.2e}")


if __name__ == "__main__":
    main()
