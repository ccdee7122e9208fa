import numpy as np
import pytest

from opweight.algebra import AlgebraSpec
from opweight.cpmap import (CpFamilySampler, CpMap, amplified_gram, cayley_monotone, choi_kraus, cp_witness,
                            directed_join, dilation_residual, dominated_from_T, gs_limit_check,
                            is_completely_positive, order_leq, order_leq_via_T, rho_from_T, sampled_min_eigenvalue,
                            solve_T, transpose_map)
from opweight.errors import GammaOutOfRange, NotInH, NotPositive
from opweight.hmodule import ModuleMap, identity_map, spectrum
from opweight.instances import identity_weight, random_kraus_map, random_weight
from opweight.ksgns import build_canonical_ksgns

A2 = AlgebraSpec((2,))


def test_identity_and_kraus_maps_are_cp(rng):
    assert is_completely_positive(CpMap.identity(A2))
    rho = random_kraus_map(AlgebraSpec((1, 2)), AlgebraSpec((2,)), rng)
    assert is_completely_positive(rho)
    assert sampled_min_eigenvalue(rho, rng, tuples=200) >= -1e-12
    assert dilation_residual(rho) < 1e-12


def test_transpose_is_rejected_with_witness():
    tr = transpose_map(A2)
    assert not is_completely_positive(tr)
    w = cp_witness(tr)
    assert w.min_eigenvalue == pytest.approx(-1.0)
    value = np.linalg.eigvalsh(w.evaluate(tr).mat)[0]
    assert value < -0.5
    assert choi_kraus(tr)[1] == pytest.approx(-1.0)


def test_transpose_is_still_positive():
    # positive but not completely positive: the plain Gram test (n = 1) cannot see it
    tr = transpose_map(A2)
    x = np.array([[1.0, 2.0], [0.5, -1.0]])
    p = x.conj().T @ x
    assert np.linalg.eigvalsh(tr.apply_dense(p))[0] >= -1e-12


def test_amplified_gram_is_hermitian(rng):
    g = amplified_gram(random_kraus_map(A2, A2, rng))
    assert np.allclose(g, g.conj().T)


def test_order(rng):
    rho = random_kraus_map(A2, A2, rng)
    assert order_leq(rho * 0.5, rho)
    assert not order_leq(rho, rho * 0.5)


def test_solve_T_on_the_weight_itself():
    phi = identity_weight()
    t = build_canonical_ksgns(phi)
    d = solve_T(phi.as_cpmap(), t)
    assert np.allclose(d.T.mat, np.eye(t.E.dim), atol=1e-10)
    half = solve_T(phi.as_cpmap() * 0.5, t)
    assert np.allclose(half.T.mat, 0.5 * np.eye(t.E.dim), atol=1e-10)


def test_solve_T_round_trip(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    T0 = CpFamilySampler(t, 1.0, seed=3).sample_T()
    d = solve_T(rho_from_T(t, T0), t)
    assert np.abs(d.T.mat - T0.mat).max() < 1e-8
    assert d.residuals["commutant"] < 1e-9


def test_solve_T_rejects_map_not_below(rng):
    phi = identity_weight()
    t = build_canonical_ksgns(phi)
    with pytest.raises(NotInH):
        solve_T(transpose_map(A2), t)


def test_sampler_stays_in_unit_interval(rng):
    t = build_canonical_ksgns(random_weight(rng))
    sampler = CpFamilySampler(t, 0.5, seed=1)
    for _ in range(5):
        ev = spectrum(sampler.sample_T())
        assert ev[0] >= -1e-12 and ev[-1] <= 0.5 + 1e-12


def test_sampler_is_reproducible(rng):
    t = build_canonical_ksgns(random_weight(rng))
    a = CpFamilySampler(t, seed=9).sample_T()
    b = CpFamilySampler(t, seed=9).sample_T()
    assert np.array_equal(a.mat, b.mat)


def test_dominated_maps_respect_the_order(rng):
    t = build_canonical_ksgns(random_weight(rng))
    T = CpFamilySampler(t, seed=2).sample_T()
    d1, d2 = dominated_from_T(t, T * 0.5), dominated_from_T(t, T)
    assert order_leq_via_T(d1, d2)
    assert order_leq(d1.rho, d2.rho)
    assert order_leq(d2.rho, rho_from_T(t, identity_map(t.E)))


def _scalar_triplet():
    return build_canonical_ksgns(identity_weight(AlgebraSpec((1,))))


def test_join_scalar_two_thirds():
    t = _scalar_triplet()
    one = dominated_from_T(t, identity_map(t.E))
    j = directed_join(one, one, t, gamma=0.5)
    assert abs(j.dominated.T.mat[0, 0] - 2.0 / 3.0) <= 4 * np.finfo(float).eps


def test_join_with_zero_gives_gamma_T():
    t = _scalar_triplet()
    one = dominated_from_T(t, identity_map(t.E))
    zero = dominated_from_T(t, identity_map(t.E) * 0.0)
    j = directed_join(one, zero, t, gamma=0.3)
    assert j.dominated.T.mat[0, 0] == pytest.approx(0.3)


def test_join_slacks(rng):
    t = build_canonical_ksgns(random_weight(rng))
    s = CpFamilySampler(t, seed=4)
    j = directed_join(s.sample(), s.sample(), t, lams=(0.4, 0.7))
    assert j.gamma == pytest.approx(0.85)
    assert j.lam == pytest.approx(0.7 / 0.85)
    assert min(j.slacks.values()) >= -1e-10


def test_join_rejects_bad_gamma():
    t = _scalar_triplet()
    one = dominated_from_T(t, identity_map(t.E))
    with pytest.raises(GammaOutOfRange):
        directed_join(one, one, t, lams=(0.5, 0.0), gamma=0.4)
    with pytest.raises(GammaOutOfRange):
        directed_join(one, dominated_from_T(t, identity_map(t.E) * 2.0), t)


def test_cayley_monotone():
    t = _scalar_triplet()
    E = t.E
    T1, T2 = ModuleMap(E, E, [[1.0]]), ModuleMap(E, E, [[3.0]])
    assert cayley_monotone(T1, T2) == pytest.approx(0.75 - 0.5)
    with pytest.raises(NotPositive):
        cayley_monotone(T2, T1)


def test_gs_limit():
    rho = CpMap.identity(A2)
    x, b = A2.unit() * 3.0, A2.unit()
    lam, resid, ok = gs_limit_check(rho, x, b, 1e-6)
    assert ok and 0 < lam < 1 and resid <= 1e-6
    with pytest.raises(ValueError):
        gs_limit_check(rho, x, b, 0.0)


def test_cpmap_json_round_trip(rng):
    rho = random_kraus_map(AlgebraSpec((1, 2)), A2, rng)
    assert np.allclose(CpMap.from_json(rho.to_json()).coeffs, rho.coeffs)
