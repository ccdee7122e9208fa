"""Build the canonical dilation of a random weight and explore the maps below it.

    python demos/dilation_walkthrough.py [seed]
"""

import sys

import numpy as np

from opweight.cpmap import CpFamilySampler, directed_join, order_leq, solve_T
from opweight.instances import random_weight
from opweight.ksgns import build_canonical_ksgns, verify_ksgns
from opweight.regular import construct_weight, seed_from_triplet


def main(seed: int = 0):
    rng = np.random.default_rng(seed)
    phi = random_weight(rng)
    print(f"weight {phi.source.block_dims} -> {phi.target.block_dims}, norm {phi.norm():.4f}")

    t = build_canonical_ksgns(phi)
    rep = verify_ksgns(phi, t)
    print(f"canonical module has dimension {t.E.dim}; {len(rep.checks)} checks, passed={rep.passed}")

    sampler = CpFamilySampler(t, seed=seed)
    d1, d2 = sampler.sample(), sampler.sample()
    recovered = solve_T(d1.rho, t)
    print(f"operator recovered from its map to {np.abs(recovered.T.mat - d1.T.mat).max():.2e}")

    j = directed_join(d1, d2, t, lams=(0.5, 0.5))
    above = order_leq(d1.rho * 0.5, j.dominated.rho * j.lam) and order_leq(d2.rho * 0.5, j.dominated.rho * j.lam)
    print(f"join with gamma={j.gamma:.2f} dominates both halves: {above}")

    built = construct_weight(seed_from_triplet(t))
    print(f"rebuilt from seed data, coefficient error {np.abs(built.weight.coeffs - phi.coeffs).max():.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
