"""How the Fock-space cutoff limits the two-route agreement.

Part 1: factorization residual of U^dag rho0 U for the truncated coherent
state |g, alpha, 0>, against N.  Part 2: the same residual and the route
distance for a state built as an exact product of truncated coherent factors
in the transformed frame, whose support fits inside complete excitation
blocks.  Its residual is zero at every N and its route distance is set by
the integrator alone.
"""
import argparse
import math

import numpy as np

from bimodal_jcm.beamsplitter import build_transform, check_factorization, from_transformed_frame, to_transformed_frame
from bimodal_jcm.evolution import TimeGrid, compare_routes
from bimodal_jcm.hilbert import coherent_state, fock_state, pure_density
from bimodal_jcm.linalg import kron
from bimodal_jcm.model import SystemParams


def lab_coherent_state(alpha, n):
    return pure_density(np.kron([1, 0], np.kron(coherent_state(alpha, n), fock_state(0, n))))


def block_limited_state(params, alpha, k1, k2):
    n = params.n_trunc
    c, s = math.cos(params.gamma), math.sin(params.gamma)

    def cut(beta, k):
        v = coherent_state(beta, 4 * n)[:n].copy()
        v[k:] = 0
        return v / np.linalg.norm(v)

    f1 = np.kron([1, 0], cut(alpha * c, k1))
    f2 = cut(-alpha * s, k2)
    ft = build_transform(params.gamma, params.spec)
    return from_transformed_frame(ft, kron(pure_density(f1), pure_density(f2)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--routes", action="store_true", help="also integrate both routes (slow for N >= 10)")
    ap.add_argument("--steps", type=int, default=4000)
    args = ap.parse_args()
    g1, g2 = 1.0, 0.5
    g = math.hypot(g1, g2)

    print("N   residual(truncated coherent)  residual(block limited)  route distance(block limited)")
    for n in (6, 8, 10, 12, 16, 20):
        p = SystemParams(10 * g, 10 * g, g1, g2, 0.1 * g, n)
        ft = build_transform(p.gamma, p.spec)
        *_, res_a, _ = check_factorization(to_transformed_frame(ft, lab_coherent_state(args.alpha, n)), p.spec)
        k2 = max(1, (n + 1) // 3)
        k1 = n + 1 - k2
        rho_b = block_limited_state(p, args.alpha, k1, k2)
        *_, res_b, _ = check_factorization(to_transformed_frame(ft, rho_b), p.spec)
        dist = ""
        if args.routes and n <= 12:
            rep = compare_routes(rho_b, p, TimeGrid(10 / g, args.steps), store_stride=args.steps // 10,
                                 rotating=True)
            dist = f"{rep.max_frobenius_distance:.3e}"
        print(f"{n:<3d} {res_a:<29.3e} {res_b:<24.3e} {dist}")


if __name__ == "__main__":
    main()
