#!/usr/bin/env python3
"""Build a sign-vector packing family and report separation, KL and the Fano budget."""
import argparse
import itertools

import numpy as np

from flr.grid import equispaced
from flr.kernelcore import SobolevKernelSpec, kernel_matrix
from flr.minimax import build_packing_slopes, fano_budget, max_kl, varshamov_gilbert
from flr.operators import discretize, eigendecompose


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--J", type=int, default=16)
    ap.add_argument("--theta", type=float, default=1.0)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--m", type=int, default=256)
    args = ap.parse_args()
    g = equispaced(args.m)
    lk = eigendecompose(discretize(kernel_matrix(SobolevKernelSpec(2), g), g))
    mu = np.arange(1, 2 * args.J + 1, dtype=float) ** (-1 / args.p)
    ps = build_packing_slopes(lk, mu, args.theta, args.J, varshamov_gilbert(args.J))
    sep = min(ps.w_distance_sq_grid(a, b) for a, b in itertools.combinations(range(ps.size), 2))
    print(f"codewords {ps.size}, min squared W-distance {sep:.3e} "
          f"(floor {mu[-1] ** (2 * args.theta):.3e})")
    print(f"max KL {max_kl(ps, args.sigma):.3e} "
          f"(cap {2 / args.sigma**2 * mu[args.J - 1] ** (1 + 2 * args.theta):.3e})")
    for row in fano_budget([256, 1024, 4096, 16384], args.p, args.theta, args.sigma):
        print(f"N={row['N']:>6d} J={row['J']:>4d} KL/logL={row['ratio']:.3f}")


if __name__ == "__main__":
    main()
