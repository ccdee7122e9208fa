"""Random test instances at desk scale."""

from __future__ import annotations

import numpy as np

from .algebra import AlgebraSpec, Element
from .cpmap import CpMap, transpose_map
from .ksgns import Weight, build_canonical_ksgns

SPECS = ((1,), (2,), (3,), (1, 1), (1, 2), (2, 1), (1, 1, 1))
MAX_MODULE_DIM = 20


def random_spec(rng: np.random.Generator, max_size: int = 3) -> AlgebraSpec:
    choices = [s for s in SPECS if sum(s) <= max_size]
    return AlgebraSpec(choices[rng.integers(len(choices))])


def random_kraus_map(A: AlgebraSpec, B: AlgebraSpec, rng: np.random.Generator, count: int | None = None) -> CpMap:
    count = count or int(rng.integers(1, 3))
    shape = (A.size, B.size)
    ks = [rng.standard_normal(shape) + 1j * rng.standard_normal(shape) for _ in range(count)]
    return CpMap.from_kraus(A, B, [k / np.sqrt(A.size * B.size) for k in ks])


def random_projection(A: AlgebraSpec, rng: np.random.Generator) -> Element:
    """A random nonzero projection (the unit when the draw comes out zero)."""
    blocks = []
    for n in A.block_dims:
        r = int(rng.integers(0, n + 1))
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, _ = np.linalg.qr(z)
        blocks.append(q[:, :r] @ q[:, :r].conj().T)
    p = Element.from_blocks(A, blocks)
    return p if np.trace(p.mat).real > 0.5 else A.unit()


def random_weight(rng: np.random.Generator, dense: bool = True, max_size: int = 3) -> Weight:
    """A completely positive weight whose canonical module has dimension at most 20."""
    while True:
        A, B = random_spec(rng, max_size), random_spec(rng, max_size)
        rho = random_kraus_map(A, B, rng)
        p = A.unit() if dense else random_projection(A, rng)
        phi = Weight.from_cpmap(rho, p)
        if build_canonical_ksgns(phi).E.dim <= MAX_MODULE_DIM:
            return phi


def identity_weight(spec: AlgebraSpec = AlgebraSpec((2,))) -> Weight:
    return Weight.from_cpmap(CpMap.identity(spec))


def zero_weight(spec: AlgebraSpec = AlgebraSpec((2,))) -> Weight:
    return Weight.from_cpmap(CpMap.identity(spec) * 0.0)


def trace_weight(spec: AlgebraSpec = AlgebraSpec((2,))) -> Weight:
    scalars = AlgebraSpec((1,))
    return Weight.from_cpmap(CpMap.from_function(spec, scalars, lambda x: scalars.unit() * np.trace(x.mat)))


def random_non_cp_map(A: AlgebraSpec, rng: np.random.Generator) -> CpMap:
    """A Hermitian-preserving map with a clearly negative amplified Gram.

    A transpose on one block, conjugated by a random invertible element and
    mixed with a small completely positive part.
    """
    blocks = [i for i, n in enumerate(A.block_dims) if n > 1]
    block = blocks[rng.integers(len(blocks))]
    g = A.random_element(rng)
    g = g + A.unit() * (2.0 * g.norm())
    tr = transpose_map(A, block)
    twisted = CpMap.from_function(A, A, lambda x: g.H @ tr(x) @ g)
    twisted = twisted * (1.0 / twisted.norm())
    cp = random_kraus_map(A, A, rng)
    return twisted + cp * (0.1 * rng.uniform() / max(cp.norm(), 1e-12))


def random_positive(A: AlgebraSpec, rng: np.random.Generator) -> Element:
    x = A.random_element(rng)
    return x.H @ x


def random_ordered_pair(d: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Dense PSD matrices ``S1 <= S2``."""
    def psd():
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        z = z @ z.conj().T
        # spread the spectrum over several orders of magnitude
        return z * 10.0 ** rng.uniform(-3, 2)
    s1 = psd()
    return s1, s1 + psd()
