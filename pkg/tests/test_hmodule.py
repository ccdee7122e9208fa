import numpy as np
import pytest

from opweight.algebra import AlgebraSpec
from opweight.errors import NoRepresentative, NotAdjointable
from opweight.hmodule import (ModuleMap, ModuleRep, adjoint_solve, as_element, compact_rep, free_module,
                              left_mult, map_from_vector, module_funm, op_norm, positive_part_check, spectrum,
                              tensor_map, tensor_module, zero_module)


def test_free_module_axioms():
    F = free_module(AlgebraSpec((1, 2)))
    assert F.dim == 5
    assert max(F.validate().values()) < 1e-12
    assert F.is_orthonormal


def test_zero_module():
    Z = zero_module(AlgebraSpec((2,)))
    assert Z.dim == 0
    assert max(Z.validate().values()) == 0.0


def test_inner_product_on_free_module(rng):
    B = AlgebraSpec((2, 1))
    F = free_module(B)
    x, y = B.random_element(rng), B.random_element(rng)
    assert np.allclose(F.inner(x.vec(), y.vec()).mat, (y.H @ x).mat)
    assert F.vector_norm(x.vec()) == pytest.approx(x.norm())


def test_right_mult(rng):
    B = AlgebraSpec((2,))
    F = free_module(B)
    x, b = B.random_element(rng), B.random_element(rng)
    assert np.allclose(F.right_mult(b) @ x.vec(), (x @ b).vec())


def test_left_mult_round_trip(rng):
    B = AlgebraSpec((1, 2))
    c = B.random_element(rng)
    assert np.allclose(as_element(left_mult(c)).mat, c.mat)
    assert left_mult(c).b_linearity_defect() < 1e-12


def test_right_mult_is_not_a_left_mult(rng):
    B = AlgebraSpec((2,))
    F = free_module(B)
    b = B.random_element(rng)
    with pytest.raises(NoRepresentative):
        as_element(ModuleMap(F, F, F.right_mult(b)))


def test_adjoint_matches_solver(rng):
    B = AlgebraSpec((2,))
    c = B.random_element(rng)
    t = left_mult(c)
    assert np.allclose(adjoint_solve(t).mat, t.H.mat)
    assert np.allclose(t.H.mat, left_mult(c.H).mat)


def test_non_b_linear_map_has_no_adjoint(rng):
    B = AlgebraSpec((2,))
    F = free_module(B)
    t = ModuleMap(F, F, F.right_mult(B.random_element(rng)))
    with pytest.raises(NotAdjointable):
        adjoint_solve(t)


def test_compact_rep(rng):
    B = AlgebraSpec((1, 2))
    F = free_module(B)
    x = B.random_element(rng).vec()
    assert np.allclose(compact_rep(map_from_vector(F, x)), x)


def test_op_norm_and_spectrum(rng):
    B = AlgebraSpec((2,))
    c = B.random_element(rng)
    p = c.H @ c
    assert op_norm(left_mult(c)) == pytest.approx(c.norm())
    ev = spectrum(left_mult(p))
    assert ev[-1] == pytest.approx(p.norm())
    assert positive_part_check(left_mult(p))
    assert not positive_part_check(left_mult(p * -1.0))


def test_module_funm_on_scaled_gram():
    B = AlgebraSpec((1,))
    E = ModuleRep(B, np.ones((1, 2, 2)) * np.eye(2), np.diag([4.0, 1.0]).reshape(2, 2, 1, 1))
    T = ModuleMap(E, E, np.diag([0.25, 1.0]))
    root = module_funm(T, np.sqrt)
    assert np.allclose((root @ root).mat, T.mat)


def test_tensor_module_dimension_and_inner(rng):
    B1, B2 = AlgebraSpec((1, 1)), AlgebraSpec((2,))
    E = tensor_module(free_module(B1), free_module(B2))
    assert E.dim == free_module(B1).dim * free_module(B2).dim
    assert max(E.validate().values()) < 1e-12
    c1, c2 = B1.random_element(rng), B2.random_element(rng)
    t = tensor_map(left_mult(c1), left_mult(c2), E, E)
    assert op_norm(t) == pytest.approx(c1.norm() * c2.norm())


def test_module_json_round_trip(rng):
    F = free_module(AlgebraSpec((1, 2)))
    again = ModuleRep.from_json(F.to_json())
    assert np.allclose(again.gram, F.gram) and np.allclose(again.action, F.action)
