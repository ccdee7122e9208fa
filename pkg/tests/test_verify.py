import numpy as np
import pytest

from opweight.algebra import AlgebraSpec
from opweight.errors import DominationViolated, NotMonotone, NotPositiveFunctional
from opweight.hmodule import ModuleMap, ModuleRep, free_module, left_mult
from opweight.verify import (MONITOR, InequalityMonitor, SesquilinearForm, algebra_inequality, gns,
                             is_positive_functional, monotone_limit, reconstruct_omega, square_norm_bound,
                             strong_convergence_equiv, theta_form)

M3 = AlgebraSpec((3,))


def trace_functional(spec):
    return np.array([np.trace(b) for b in spec.basis_dense])


def corner_functional(spec):
    return np.array([b[0, 0] for b in spec.basis_dense])


def test_gns_of_trace_is_full():
    data = gns(M3, trace_functional(M3))
    assert data.dim == 9
    # pi is left multiplication: pi(x) pi(y) = pi(xy)
    x, y = M3.basis()[1], M3.basis()[3]
    assert np.allclose(data.pi_of(x) @ data.pi_of(y), data.pi_of(x @ y))


def test_gns_of_corner_is_column_space():
    assert gns(M3, corner_functional(M3)).dim == 3


def test_gns_of_zero():
    assert gns(M3, np.zeros(M3.dim)).dim == 0


def test_gns_rejects_non_positive():
    with pytest.raises(NotPositiveFunctional):
        gns(M3, -trace_functional(M3))
    assert not is_positive_functional(M3, -trace_functional(M3))


def test_gns_vector_reproduces_functional(rng):
    spec = AlgebraSpec((1, 2))
    z = rng.standard_normal((3, 3))
    dens = spec.from_vec(spec.dense_to_vec(z @ z.T)).mat
    theta = np.array([np.trace(dens @ b) for b in spec.basis_dense])
    data = gns(spec, theta)
    x = spec.random_element(rng)
    assert data.v.conj() @ data.pi_of(x) @ data.v == pytest.approx(np.trace(dens @ x.mat))


def _whole_algebra_form(spec, theta, factor):
    basis = np.eye(spec.dim, dtype=complex)
    return SesquilinearForm(spec, basis, factor * theta_form(gns(spec, theta), basis))


@pytest.mark.parametrize("factor", [1.0, 0.5, 0.0])
def test_reconstruct_omega_scaling(factor):
    theta = trace_functional(M3)
    out = reconstruct_omega(theta, _whole_algebra_form(M3, theta, factor))
    assert out.report.passed, out.report.to_text()
    assert np.allclose(out.T, factor * np.eye(9), atol=1e-10)
    assert np.abs(out.omega - factor * theta).max() <= 1e-10


def test_reconstruct_omega_rejects_dominating_form():
    theta = trace_functional(M3)
    with pytest.raises(DominationViolated):
        reconstruct_omega(theta, _whole_algebra_form(M3, theta, 1.5))


def test_reconstruct_omega_basis_independent(rng):
    spec = AlgebraSpec((2,))
    theta = trace_functional(spec)
    data = gns(spec, theta)
    basis = np.eye(spec.dim, dtype=complex)
    # on a factor the commutant of pi is the scalars
    T = 0.9 * np.eye(data.dim)
    X = np.stack([data.vector_of(b) for b in basis.T], axis=1)
    form = (X.conj().T @ T @ X).T
    perm = rng.permutation(spec.dim)
    one = reconstruct_omega(theta, SesquilinearForm(spec, basis, form))
    two = reconstruct_omega(theta, SesquilinearForm(spec, basis[:, perm], form[np.ix_(perm, perm)]))
    assert np.abs(one.omega - two.omega).max() <= 1e-10


def _probes(E, rng, n=3):
    return [rng.standard_normal(E.dim) + 1j * rng.standard_normal(E.dim) for _ in range(n)]


def test_strong_convergence_of_scaled_net(rng):
    B = AlgebraSpec((2,))
    c = B.random_element(rng)
    T = left_mult(c.H @ c)
    nets = [T * (1 - 10.0 ** -k) for k in range(1, 13)]
    out = strong_convergence_equiv(nets, T, _probes(T.source, rng))
    assert out.equivalent


def test_constant_net_does_not_converge(rng):
    B = AlgebraSpec((2,))
    T = left_mult(B.unit())
    out = strong_convergence_equiv([T * 0.5] * 4, T, _probes(T.source, rng))
    assert not out.equivalent and out.bound_ok


def test_random_chain(rng):
    F = free_module(AlgebraSpec((1, 2)))
    incs = []
    for _ in range(6):
        c = F.base.random_element(rng)
        incs.append(left_mult(c.H @ c) * 0.1)
    T = sum(incs[1:], incs[0])
    zero = T * 0.0
    nets = [T - sum(incs[k:], zero) for k in range(1, 7)]
    out = strong_convergence_equiv(nets, T, _probes(F, rng))
    assert out.equivalent
    lim = monotone_limit(nets, _probes(F, rng))
    assert np.allclose(lim.limit.mat, T.mat)
    assert lim.report.passed


def test_monotone_limit_examples(rng):
    F = free_module(AlgebraSpec((2,)))
    one = ModuleMap(F, F, np.eye(F.dim))
    assert monotone_limit([one, one]).limit is one
    nets = [one * (1 - 2.0 ** -k) for k in range(1, 40)] + [one]
    assert np.allclose(monotone_limit(nets).limit.mat, np.eye(F.dim))
    with pytest.raises(NotMonotone):
        monotone_limit([one, one * 0.5])


def test_square_norm_inequality(rng):
    B = AlgebraSpec((1, 2))
    c = B.random_element(rng)
    p = c.H @ c
    lhs, rhs = square_norm_bound(left_mult(p), B.random_element(rng).vec())
    assert lhs <= rhs * (1 + 1e-12)
    assert algebra_inequality(p, B.random_element(rng)) <= 1e-12 * max(1.0, rhs)


def test_monitor_raises_on_non_positive_operator():
    C = AlgebraSpec((1,))
    H = ModuleRep(C, np.eye(2)[None], np.eye(2).reshape(2, 2, 1, 1))
    monitor = InequalityMonitor()
    swap = ModuleMap(H, H, [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(AssertionError):
        monitor.observe(swap, np.array([1.0, 0.0]))
    assert monitor.count == 1


def test_global_monitor_records(rng):
    before = MONITOR.count
    B = AlgebraSpec((2,))
    c = B.random_element(rng)
    algebra_inequality(c.H @ c, B.random_element(rng))
    assert MONITOR.count == before + 1
