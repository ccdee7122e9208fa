import numpy as np
import pytest

from opweight.algebra import AlgebraSpec, Element, orthonormal_span
from opweight.cpmap import CpFamilySampler, CpMap
from opweight.errors import NotDenselyDefined, SeedInconsistent, ZeroLambdaExactMode
from opweight.hmodule import ModuleMap, ModuleRep
from opweight.instances import identity_weight, random_weight, zero_weight
from opweight.ksgns import Weight, build_canonical_ksgns
from opweight.regular import (SeedData, TruncatingNet, build_quotient_module, certify_regular, close_lambda,
                              construct_weight, core_approximation,
                              rho_family_convergence, seed_from_triplet, verify_truncating_net)

C = AlgebraSpec((1,))


def hilbert(d):
    return ModuleRep(C, np.eye(d)[None], np.eye(d).reshape(d, d, 1, 1))


def test_closure_of_closed_seed_is_unchanged(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    Ts = [ModuleMap(t.E, t.E, lam * np.eye(t.E.dim)) for lam in (0.25, 0.5)]
    closed = close_lambda(seed_from_triplet(t, Ts))
    assert np.allclose(closed.Lambda, t.Lambda)
    assert np.allclose(closed.pi, t.pi)


def test_closure_recovers_left_ideal():
    A = AlgebraSpec((2,))
    p = Element(A, np.diag([1.0, 0.0]))
    phi = Weight.from_cpmap(CpMap.identity(A), p)
    closed = close_lambda(seed_from_triplet(build_canonical_ksgns(phi)))
    expected = orthonormal_span(A.dense_to_vec(A.basis_dense @ p.mat).T)
    assert closed.rank == expected.shape[1] == 2
    assert np.allclose(closed.n_basis @ closed.n_basis.conj().T, expected @ expected.conj().T)


def test_fault_injection_is_rejected():
    t = build_canonical_ksgns(identity_weight())
    seed = seed_from_triplet(t)
    bad = SeedData(seed.source, seed.E, seed.N0, seed.Lambda0 * (1 + 1e-3), seed.family)
    with pytest.raises(SeedInconsistent, match="residual"):
        close_lambda(bad)


def test_non_ideal_span_is_rejected():
    t = build_canonical_ksgns(identity_weight())
    seed = seed_from_triplet(t)
    bad = SeedData(seed.source, seed.E, seed.N0[:, :1], seed.Lambda0[:1], seed.family)
    with pytest.raises(SeedInconsistent, match="left ideal"):
        close_lambda(bad)


def test_family_must_end_with_identity():
    t = build_canonical_ksgns(identity_weight())
    half = ModuleMap(t.E, t.E, 0.5 * np.eye(t.E.dim))
    seed = seed_from_triplet(t, [half])
    with pytest.raises(SeedInconsistent, match="identity"):
        close_lambda(SeedData(seed.source, seed.E, seed.N0, seed.Lambda0, seed.family[:1]))


def test_round_trip(rng):
    for _ in range(3):
        phi = random_weight(rng)
        built = construct_weight(seed_from_triplet(build_canonical_ksgns(phi)))
        assert built.report.passed, built.report.to_text()
        assert np.abs(built.weight.coeffs - phi.coeffs).max() <= 1e-9 * (1 + phi.norm())


def test_zero_module_seed_gives_zero_weight():
    built = construct_weight(seed_from_triplet(build_canonical_ksgns(zero_weight())))
    assert built.triplet.E.dim == 0
    assert np.abs(built.weight.coeffs).max(initial=0.0) == 0.0


def test_scalar_seed_gives_functional():
    A = AlgebraSpec((1, 1))
    a, b = 0.6, 1.5j
    E = hilbert(2)
    lam0 = np.array([[[a], [0.0]], [[0.0], [b]]])
    rho = CpMap.from_function(A, C, lambda x: C.unit() * (abs(a) ** 2 * x.mat[0, 0] + abs(b) ** 2 * x.mat[1, 1]))
    seed = SeedData(A, E, np.eye(2), lam0, ((ModuleMap(E, E, np.eye(2)), rho),))
    built = construct_weight(seed)
    assert built.report.passed, built.report.to_text()
    assert built.weight(A.unit()).mat[0, 0] == pytest.approx(abs(a) ** 2 + abs(b) ** 2)
    assert built.weight(Element(A, np.diag([1.0, 0.0]))).mat[0, 0] == pytest.approx(0.36)


def test_seed_json_round_trip(rng):
    seed = seed_from_triplet(build_canonical_ksgns(random_weight(rng)))
    again = SeedData.from_json(seed.to_json())
    assert np.allclose(again.Lambda0, seed.Lambda0)
    assert len(again.family) == len(seed.family)


def test_one_element_net(rng):
    phi = random_weight(rng)
    reg = certify_regular(phi, TruncatingNet((phi.source.unit(),)))
    assert reg.report.passed, reg.report.to_text()


def test_partial_unit_net_gives_projections():
    A = AlgebraSpec((1, 2))
    phi = identity_weight(A)
    reg = certify_regular(phi)
    assert reg.report.passed, reg.report.to_text()
    for nd in reg.data:
        assert np.allclose(nd.S.mat @ nd.S.mat, nd.S.mat, atol=1e-10)
        assert np.allclose(nd.rho.coeffs, CpMap.from_function(A, A, lambda x: nd.u @ x @ nd.u).coeffs)


def test_net_with_large_element_fails():
    phi = identity_weight()
    A = phi.source
    rep, _ = verify_truncating_net(phi, build_canonical_ksgns(phi), TruncatingNet((A.unit() * 2.0, A.unit())))
    assert not rep["net/unit-norm"].passed


def test_net_needs_dense_domain(rng):
    A = AlgebraSpec((2,))
    phi = Weight.from_cpmap(CpMap.identity(A), Element(A, np.diag([1.0, 0.0])))
    with pytest.raises(NotDenselyDefined):
        certify_regular(phi)


def test_quotient_of_identity_weight():
    phi = identity_weight()
    t = build_canonical_ksgns(phi)
    qm = build_quotient_module(phi, t)
    assert qm.report.passed, qm.report.to_text()
    assert qm.module.dim == t.E.dim


def test_quotient_with_samples(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    sampler = CpFamilySampler(t, seed=1)
    qm = build_quotient_module(phi, t, samples=[sampler.sample() for _ in range(3)])
    assert qm.report.passed, qm.report.to_text()


def test_quotient_dimension_follows_central_projection():
    B = AlgebraSpec((1, 1))
    phi = identity_weight(B)
    t = build_canonical_ksgns(phi)
    q = Element(B, np.diag([1.0, 0.0]))
    qm = build_quotient_module(phi, t, q)
    assert qm.report.passed, qm.report.to_text()
    assert qm.module.dim == 1


def test_core_approximation_with_unit_net():
    phi = identity_weight()
    t = build_canonical_ksgns(phi)
    A = phi.source
    reg = certify_regular(phi, TruncatingNet((A.unit(),)), t)
    a = A.basis()[1]
    out = core_approximation(phi, t, reg.data, A.basis(), a)
    assert out.errors[0] == 0.0
    assert out.report.passed


def test_core_approximation_converges(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    reg = certify_regular(phi, t=t)
    A = phi.source
    core = [A.basis()[0] + A.random_element(rng) * 1e-3 for _ in range(A.dim)]
    out = core_approximation(phi, t, reg.data, core, A.random_element(rng), eps=1e-6)
    assert out.report.passed, out.report.to_text()


def test_zero_lambda_needs_slack_mode():
    A = AlgebraSpec((1, 1))
    phi = Weight.from_cpmap(CpMap.from_function(A, A, lambda x: A.from_vec(x.vec() * np.array([1, 0]))))
    t = build_canonical_ksgns(phi)
    reg = certify_regular(phi, t=t)
    a = A.basis()[1]
    with pytest.raises(ZeroLambdaExactMode):
        core_approximation(phi, t, reg.data, A.basis(), a)
    out = core_approximation(phi, t, reg.data, A.basis(), a, mode="slack", bound=1.0)
    assert out.report.passed
    with pytest.raises(ValueError):
        core_approximation(phi, t, reg.data, A.basis(), a, mode="slack", bound=0.0)


def test_rho_family_convergence(rng):
    phi = random_weight(rng)
    t = build_canonical_ksgns(phi)
    reg = certify_regular(phi, t=t)
    rep = rho_family_convergence(phi, t, reg.data, CpFamilySampler(t, seed=2), rng=rng, samples=3)
    assert rep.passed, rep.to_text()
    one = certify_regular(phi, TruncatingNet((phi.source.unit(),)), t)
    assert rho_family_convergence(phi, t, one.data)["final-index"].residual <= 1e-14
