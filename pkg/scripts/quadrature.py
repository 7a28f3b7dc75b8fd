#!/usr/bin/env python3
"""Riemann-sum error decay on equispaced and random grids."""
import argparse

from flr.grid import SamplingScheme, quadrature_rate_test
from flr.kernelcore import bernoulli_poly

M_LIST = [32, 64, 128, 256, 512, 1024, 2048, 4096]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cases = [(1, "t", lambda t: t), (2, "B2", lambda t: bernoulli_poly(2, t)),
             (2, "B4", lambda t: bernoulli_poly(4, t))]
    for kind in ("equispaced", "iid_density"):
        scheme = SamplingScheme(kind, seed=args.seed)
        for alpha, label, f in cases:
            res = quadrature_rate_test(alpha, f, M_LIST, scheme=scheme)
            print(f"{kind:>11s} alpha={alpha} f={label:<3s} slope {res.slope:6.2f} "
                  f"(bound {res.expected:+.2f}, pass={res.passes()})")


if __name__ == "__main__":
    main()
