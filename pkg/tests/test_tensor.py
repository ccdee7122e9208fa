import numpy as np

from opweight.algebra import AlgebraSpec, element_tensor
from opweight.cpmap import CpFamilySampler
from opweight.instances import identity_weight, random_weight, trace_weight
from opweight.ksgns import build_canonical_ksgns, verify_ksgns
from opweight.regular import certify_regular
from opweight.tensor import (check_factorization, check_product_convergence, check_T_transport, random_positive,
                             tensor_weight)


def regular(phi):
    return certify_regular(phi)


def test_identity_product():
    f = regular(identity_weight())
    tw = tensor_weight(f, f)
    assert tw.report.passed, tw.report.to_text()
    assert tw.triplet.E.dim == 16
    assert check_factorization(tw).passed


def test_unit_factor_changes_nothing(rng):
    phi = random_weight(rng, max_size=2)
    unit = regular(identity_weight(AlgebraSpec((1,))))
    tw = tensor_weight(regular(phi), unit)
    assert tw.report.passed, tw.report.to_text()
    assert tw.triplet.E.dim == build_canonical_ksgns(phi).E.dim
    assert np.allclose(tw.weight.coeffs, phi.coeffs, atol=1e-12)


def test_random_products(rng):
    for _ in range(2):
        f1 = regular(random_weight(rng, max_size=2))
        f2 = regular(random_weight(rng, max_size=2))
        tw = tensor_weight(f1, f2)
        assert tw.report.passed, tw.report.to_text()
        assert tw.triplet.E.dim == f1.triplet.E.dim * f2.triplet.E.dim
        assert check_factorization(tw).passed
        assert verify_ksgns(tw.weight, tw.triplet, compare_canonical=False).passed


def test_T_transport(rng):
    f1, f2 = regular(random_weight(rng, max_size=2)), regular(trace_weight())
    tw = tensor_weight(f1, f2)
    w1 = CpFamilySampler(f1.triplet, 0.9, seed=1).sample()
    w2 = CpFamilySampler(f2.triplet, 0.8, seed=2).sample()
    rep = check_T_transport(tw, w1, w2)
    assert rep.passed, rep.to_text()
    assert "T/strictly-below" in rep


def test_product_convergence(rng):
    f1, f2 = regular(random_weight(rng, max_size=2)), regular(identity_weight(AlgebraSpec((1, 1))))
    tw = tensor_weight(f1, f2)
    A = tw.weight.source
    c = element_tensor(random_positive(f1.weight.source, rng), random_positive(f2.weight.source, rng))
    d = tw.weight.target.random_element(rng)
    samplers = (CpFamilySampler(f1.triplet, seed=3), CpFamilySampler(f2.triplet, seed=4))
    rep = check_product_convergence(tw, c, d, samplers, samples=10)
    assert rep.passed, rep.to_text()
    assert A.dim == f1.weight.source.dim * f2.weight.source.dim


def test_associativity_of_spectra(rng):
    fs = [regular(identity_weight(AlgebraSpec((1,)))), regular(trace_weight()),
          regular(identity_weight(AlgebraSpec((1, 1))))]
    left = tensor_weight(regular(tensor_weight(fs[0], fs[1]).weight), fs[2])
    right = tensor_weight(fs[0], regular(tensor_weight(fs[1], fs[2]).weight))
    assert left.triplet.E.dim == right.triplet.E.dim
    lw = np.sort(np.linalg.eigvalsh(left.triplet.E.scalar_gram))
    rw = np.sort(np.linalg.eigvalsh(right.triplet.E.scalar_gram))
    assert np.allclose(lw, rw, atol=1e-9)
