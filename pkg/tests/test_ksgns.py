import numpy as np
import pytest

from opweight.algebra import AlgebraSpec
from opweight.cpmap import CpFamilySampler, transpose_map
from opweight.errors import NotCompletelyPositive
from opweight.hmodule import ModuleMap, module_funm
from opweight.instances import identity_weight, random_projection, random_weight, trace_weight, zero_weight
from opweight.ksgns import (KsgnsTriplet, Weight, build_canonical_ksgns, check_lower_semicontinuity,
                            compactness_criterion, multiplier_extension_check, unitary_between, verify_ksgns,
                            weight_gram)


@pytest.mark.parametrize("make, dim", [(identity_weight, 4), (trace_weight, 4), (zero_weight, 0)])
def test_canonical_dimensions(make, dim):
    phi = make()
    t = build_canonical_ksgns(phi)
    assert t.E.dim == dim
    assert verify_ksgns(phi, t).passed


def test_scalar_functional_gives_gns_space():
    # a faithful state on M_2 has a 4-dimensional GNS space
    A, C = AlgebraSpec((2,)), AlgebraSpec((1,))
    rho = np.diag([0.7, 0.3])
    from opweight.cpmap import CpMap
    phi = Weight.from_cpmap(CpMap.from_function(A, C, lambda x: C.unit() * np.trace(rho @ x.mat)))
    assert build_canonical_ksgns(phi).E.dim == 4


def test_transpose_rejected():
    with pytest.raises(NotCompletelyPositive) as info:
        build_canonical_ksgns(Weight.from_cpmap(transpose_map(AlgebraSpec((2,)))))
    assert info.value.witness["min_eigenvalue"] < -0.5


def test_reconstruction(rng):
    for _ in range(5):
        phi = random_weight(rng, dense=bool(rng.integers(2)))
        t = build_canonical_ksgns(phi)
        rep = verify_ksgns(phi, t, rng=rng)
        assert rep.passed, rep.to_text()
        assert np.abs(weight_gram(phi, t.n_basis) - t.weight_values()).max() <= 1e-9 * (1 + phi.norm())


def test_perturbed_embedding_fails():
    phi = identity_weight()
    t = build_canonical_ksgns(phi)
    bad = KsgnsTriplet(t.source, t.E, t.n_basis, t.Lambda * (1 + 1e-3), t.pi)
    rep = verify_ksgns(phi, bad)
    assert not rep.passed
    assert rep["inner-product"].residual == pytest.approx(2e-3, rel=0.05)


def test_rotated_copy_passes(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    E = t.E
    basis = E.self_adjoint_basis
    h = ModuleMap(E, E, np.tensordot(rng.standard_normal(len(basis)), basis, axes=(0, 0)))
    U = module_funm(h, lambda v: np.exp(1j * v)).mat
    Uinv = np.linalg.inv(U)
    moved = KsgnsTriplet(t.source, E, t.n_basis, np.einsum("ij,sjk->sik", U, t.Lambda),
                         np.einsum("ij,qjk,kl->qil", U, t.pi, Uinv))
    rep = verify_ksgns(phi, moved)
    assert rep.passed, rep.to_text()
    _, res = unitary_between(t, moved)
    assert res["isometry"] < 1e-9


def test_triplet_json_round_trip(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    again = KsgnsTriplet.from_json(t.to_json())
    assert verify_ksgns(phi, again).passed
    assert np.allclose(Weight.from_json(phi.to_json()).coeffs, phi.coeffs)


def test_weight_compresses_to_domain(rng):
    A = AlgebraSpec((1, 2))
    p = random_projection(A, rng)
    phi = Weight.from_cpmap(identity_weight(A).as_cpmap(), p)
    x = A.random_element(rng)
    assert np.allclose(phi(x).mat, (p @ x @ p).mat)


def test_compactness(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    for a in phi.source.basis():
        x, resid = compactness_criterion(t, a)
        assert resid <= 1e-10
        assert np.allclose(t.lam(a).mat @ phi.target.unit().vec(), x)


def test_lower_semicontinuity_and_multipliers(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    assert check_lower_semicontinuity(phi, CpFamilySampler(t, seed=5), samples=5).passed
    assert multiplier_extension_check(phi, t).passed
