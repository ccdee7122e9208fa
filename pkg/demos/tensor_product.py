"""Tensor two regular weights and check the product factorizes.

    python demos/tensor_product.py [seed]
"""

import sys

import numpy as np

from opweight.algebra import element_tensor
from opweight.instances import random_weight, trace_weight
from opweight.regular import certify_regular
from opweight.tensor import check_factorization, tensor_weight


def main(seed: int = 0):
    rng = np.random.default_rng(seed)
    f1 = certify_regular(random_weight(rng, max_size=2))
    f2 = certify_regular(trace_weight())
    tw = tensor_weight(f1, f2)
    d1, d2 = f1.triplet.E.dim, f2.triplet.E.dim
    print(f"module dimensions {d1} x {d2} -> {tw.triplet.E.dim}")
    print(f"product certified: {tw.report.passed} ({len(tw.report.checks)} checks)")
    fac = check_factorization(tw)
    print(f"factorization residual {fac['weight/factorization'].residual:.2e}")

    a1 = f1.weight.source.random_element(rng)
    a2 = f2.weight.source.random_element(rng)
    lhs = tw.weight(element_tensor(a1, a2))
    rhs = element_tensor(f1.weight(a1), f2.weight(a2))
    print(f"on a random pair: |phi(a1 x a2) - phi1(a1) x phi2(a2)| = {(lhs - rhs).norm():.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
