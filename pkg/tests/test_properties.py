"""Hypothesis properties; instances are drawn from seeded numpy generators."""

import json

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from opweight.algebra import AlgebraSpec, Element, element_tensor, is_positive
from opweight.cpmap import (CpFamilySampler, cayley_monotone, directed_join, is_completely_positive,
                            rho_from_T, solve_T)
from opweight.hmodule import left_mult
from opweight.instances import SPECS, random_kraus_map, random_ordered_pair, random_weight
from opweight.jsonio import dumps
from opweight.ksgns import Weight, build_canonical_ksgns, verify_ksgns
from opweight.verify import square_norm_bound

seeds = st.integers(0, 2**32 - 1)
specs = st.sampled_from(SPECS).map(AlgebraSpec)


@given(specs, seeds)
def test_vec_dense_round_trip(spec, seed):
    x = spec.random_element(np.random.default_rng(seed))
    assert np.allclose(spec.vec_to_dense(x.vec()), x.mat)


@given(specs, specs, seeds)
def test_element_tensor_is_multiplicative(s1, s2, seed):
    rng = np.random.default_rng(seed)
    a, b = s1.random_element(rng), s1.random_element(rng)
    c, d = s2.random_element(rng), s2.random_element(rng)
    assert np.allclose(element_tensor(a @ b, c @ d).mat, (element_tensor(a, c) @ element_tensor(b, d)).mat)


@given(specs, specs, seeds)
def test_kraus_maps_are_completely_positive(s1, s2, seed):
    rng = np.random.default_rng(seed)
    rho = random_kraus_map(s1, s2, rng)
    assert is_completely_positive(rho)
    x = s1.random_element(rng)
    assert is_positive(rho(x.H @ x))


@given(seeds, st.booleans())
def test_canonical_dilation_verifies(seed, dense):
    rng = np.random.default_rng(seed)
    phi = random_weight(rng, dense=dense)
    t = build_canonical_ksgns(phi)
    assert verify_ksgns(phi, t, rng=rng).passed


@given(seeds)
def test_weight_json_is_stable(seed):
    phi = random_weight(np.random.default_rng(seed))
    once = dumps(phi.to_json())
    assert dumps(Weight.from_json(json.loads(once)).to_json()) == once


@given(seeds, st.floats(0.05, 1.0))
def test_solve_T_recovers_planted_operator(seed, lam):
    rng = np.random.default_rng(seed)
    t = build_canonical_ksgns(random_weight(rng))
    T0 = CpFamilySampler(t, lam, seed=seed).sample_T()
    d = solve_T(rho_from_T(t, T0), t)
    assert np.abs(d.T.mat - T0.mat).max() <= 1e-8 * max(1.0, t.weight_norm())


@given(seeds, st.floats(0.0, 0.95), st.floats(0.0, 0.95))
def test_join_dominates_both(seed, lam1, lam2):
    rng = np.random.default_rng(seed)
    t = build_canonical_ksgns(random_weight(rng))
    s = CpFamilySampler(t, seed=seed)
    j = directed_join(s.sample(), s.sample(), t, lams=(lam1, lam2))
    assert min(j.slacks.values(), default=0.0) >= -1e-10
    assert j.lam < 1.0


@given(st.integers(1, 5), seeds)
def test_cayley_transform_is_monotone(d, seed):
    s1, s2 = random_ordered_pair(d, np.random.default_rng(seed))
    B = AlgebraSpec((d,))
    # left multiplication turns each matrix into an operator on the free module
    T1, T2 = left_mult(Element(B, s1)), left_mult(Element(B, s2))
    scale = max(1.0, np.linalg.norm(s2, 2))
    assert cayley_monotone(T1, T2, 1e-9) >= -1e-9 * scale


@given(specs, seeds)
def test_square_norm_inequality(spec, seed):
    rng = np.random.default_rng(seed)
    c = spec.random_element(rng)
    T = left_mult(c.H @ c)
    lhs, rhs = square_norm_bound(T, spec.random_element(rng).vec())
    assert lhs <= rhs + 1e-12 * max(1.0, rhs)
