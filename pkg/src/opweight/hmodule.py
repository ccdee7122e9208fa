"""Finite-dimensional Hilbert C*-modules and adjointable maps between them.

A module over ``B`` is stored through an explicit complex basis ``e_1..e_d``:

* ``action[q]`` is the ``d x d`` matrix of right multiplication by the q-th
  matrix unit of ``B`` acting on coordinate vectors;
* ``gram[i, j]`` is the dense form of ``<e_i, e_j>``.

Inner products are linear in the first slot, ``<x b, y> = <x, y> b``.
Composing with the faithful trace of ``B`` gives an ordinary Hilbert space
structure with matrix ``scalar_gram`` where ``tr<x, y> = y^H S x``.  Every
adjointable map is adjointable for that scalar product with the same adjoint,
and the operator norms agree, which is what the numerics rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

from .algebra import (DEFAULT_TOL, AlgebraSpec, Element, commutant, hermitian_funm, min_eig,
                      spectral_norm, tensor_layout)
from .errors import NoRepresentative, NotAdjointable


@dataclass(frozen=True, eq=False)
class ModuleRep:
    base: AlgebraSpec
    action: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        d = self.gram.shape[0]
        s = self.base.size
        action = np.asarray(self.action, dtype=complex).reshape(self.base.dim, d, d)
        gram = np.asarray(self.gram, dtype=complex).reshape(d, d, s, s)
        action.setflags(write=False)
        gram.setflags(write=False)
        object.__setattr__(self, "action", action)
        object.__setattr__(self, "gram", gram)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @cached_property
    def scalar_gram(self) -> np.ndarray:
        """``S[i, j] = tr<e_j, e_i>``."""
        tr = np.trace(self.gram, axis1=2, axis2=3)
        s = tr.T
        return (s + s.conj().T) / 2

    @cached_property
    def _gram_factors(self):
        vals, vecs = np.linalg.eigh(self.scalar_gram)
        vals = np.clip(vals, 1e-300, None)
        half = (vecs * np.sqrt(vals)) @ vecs.conj().T
        inv_half = (vecs / np.sqrt(vals)) @ vecs.conj().T
        inv = (vecs / vals) @ vecs.conj().T
        return half, inv_half, inv

    @cached_property
    def is_orthonormal(self) -> bool:
        return bool(np.abs(self.scalar_gram - np.eye(self.dim)).max(initial=0.0) < 1e-13)

    @cached_property
    def self_adjoint_basis(self) -> np.ndarray:
        """Real basis of the self-adjoint operators in ``L(E)``, shape ``(k, d, d)``.

        ``L(E)`` is the commutant of the right action; its self-adjoint part is
        a real vector space and is returned orthonormalized for the
        Hilbert-Schmidt product of the scalarized matrices.
        """
        d = self.dim
        if d == 0:
            return np.zeros((0, 0, 0), dtype=complex)
        comm = commutant(self.action, d)
        half, inv_half, _ = self._gram_factors
        # self-adjoint T  <->  Hermitian half T inv_half
        herm = np.einsum("ij,kjl,lm->kim", half, comm, inv_half)
        parts = np.concatenate([(herm + herm.conj().transpose(0, 2, 1)) / 2,
                                (herm - herm.conj().transpose(0, 2, 1)) / 2j])
        flat = np.concatenate([parts.real.reshape(len(parts), -1), parts.imag.reshape(len(parts), -1)], axis=1)
        u, sv, vt = np.linalg.svd(flat, full_matrices=False)
        k = int((sv > 1e-10 * sv[0]).sum())
        vt = vt[:k]
        hb = (vt[:, :d * d] + 1j * vt[:, d * d:]).reshape(k, d, d)
        return np.einsum("ij,kjl,lm->kim", inv_half, hb, half)

    def right_mult(self, b: Element) -> np.ndarray:
        """Matrix of ``x -> x b`` on coordinates."""
        return np.tensordot(b.vec(), self.action, axes=(0, 0))

    def inner(self, x: np.ndarray, y: np.ndarray) -> Element:
        return Element(self.base, self.inner_dense(x, y))

    def inner_dense(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijpq->pq", x, np.conj(y), self.gram)

    def amplified_gram(self) -> np.ndarray:
        """``G[(j,p),(i,q)] = <e_i, e_j>[p, q]``; positive iff the inner product is."""
        d, s = self.dim, self.base.size
        return self.gram.transpose(1, 2, 0, 3).reshape(d * s, d * s)

    def vector_norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(spectral_norm(self.inner_dense(x, x)), 0.0)))

    def validate(self) -> dict[str, float]:
        """Residuals of the module axioms (all zero for a valid module)."""
        res = {}
        g = self.gram
        res["conjugate-symmetry"] = _maxabs(g - g.transpose(1, 0, 3, 2).conj())
        # <x b, y> = <x, y> b on basis vectors and matrix units
        b = self.base.basis_dense
        lhs = np.einsum("qki,kjpr->qijpr", self.action, g)
        rhs = np.einsum("ijpt,qtr->qijpr", g, b)
        res["right-linearity"] = _maxabs(lhs - rhs)
        amp = self.amplified_gram()
        scale = max(1.0, spectral_norm(amp))
        res["positivity"] = max(0.0, -min_eig(amp)) / scale
        if self.dim:
            ev = np.linalg.eigvalsh(self.scalar_gram)
            res["nondegeneracy"] = 0.0 if ev[0] > 1e-12 * max(ev[-1], 1.0) else 1.0
        else:
            res["nondegeneracy"] = 0.0
        return res

    def to_json(self) -> dict:
        from .jsonio import matrix_to_json
        return {
            "base": self.base.to_json(),
            "dim": self.dim,
            "action": {str(q): matrix_to_json(self.action[q]) for q in range(self.base.dim)},
            "gram": [[Element(self.base, self.gram[i, j]).to_json() for j in range(self.dim)]
                     for i in range(self.dim)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModuleRep":
        from .jsonio import matrix_from_json
        base = AlgebraSpec.from_json(data["base"])
        d = int(data["dim"])
        action = np.zeros((base.dim, d, d), dtype=complex)
        for key, m in data["action"].items():
            action[int(key)] = matrix_from_json(m, (d, d))
        gram = np.zeros((d, d, base.size, base.size), dtype=complex)
        for i in range(d):
            for j in range(d):
                gram[i, j] = Element.from_json(base, data["gram"][i][j]).mat
        return cls(base, action, gram)


def _maxabs(a: np.ndarray) -> float:
    return float(np.abs(a).max(initial=0.0))


@lru_cache(maxsize=None)
def free_module(spec: AlgebraSpec) -> ModuleRep:
    """``B`` as a right module over itself, basis = matrix units."""
    basis = spec.basis_dense
    # coords of beta_t beta_q
    prods = np.einsum("tab,qbc->qtac", basis, basis)
    action = spec.dense_to_vec(prods).transpose(0, 2, 1)
    gram = np.einsum("vba,tbc->tvac", basis.conj(), basis)
    return ModuleRep(spec, action, gram)


def zero_module(spec: AlgebraSpec) -> ModuleRep:
    return ModuleRep(spec, np.zeros((spec.dim, 0, 0)), np.zeros((0, 0, spec.size, spec.size)))


@dataclass(frozen=True, eq=False)
class ModuleMap:
    """A module map ``source -> target`` given by its coordinate matrix."""

    source: ModuleRep
    target: ModuleRep
    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex).reshape(self.target.dim, self.source.dim)
        object.__setattr__(self, "mat", m)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.mat @ x

    def __matmul__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(other.source, self.target, self.mat @ other.mat)

    def __add__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.mat + other.mat)

    def __sub__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.mat - other.mat)

    def __mul__(self, scalar) -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.mat * complex(scalar))

    __rmul__ = __mul__

    @cached_property
    def _adjoint(self) -> "ModuleMap":
        return ModuleMap(self.target, self.source, hilbert_adjoint(self.mat, self.source, self.target))

    def adjoint(self) -> "ModuleMap":
        """Adjoint through the trace-scalarized inner products."""
        return self._adjoint

    @property
    def H(self) -> "ModuleMap":
        return self._adjoint

    def b_linearity_defect(self) -> float:
        """``max_q |T R_q - R_q T|`` over the matrix units of the base algebra."""
        d = np.einsum("ij,qjk->qik", self.mat, self.source.action) - \
            np.einsum("qij,jk->qik", self.target.action, self.mat)
        return _maxabs(d)


def hilbert_adjoint(mat: np.ndarray, source: ModuleRep, target: ModuleRep) -> np.ndarray:
    if source.is_orthonormal and target.is_orthonormal:
        return mat.conj().T
    _, _, inv = source._gram_factors
    return inv @ mat.conj().T @ target.scalar_gram


def identity_map(E: ModuleRep) -> ModuleMap:
    return ModuleMap(E, E, np.eye(E.dim))


def inner(E: ModuleRep, x: np.ndarray, y: np.ndarray) -> Element:
    return E.inner(x, y)


def adjoint_solve(t: ModuleMap, tol: float = DEFAULT_TOL) -> ModuleMap:
    """Adjoint obtained by solving ``<t e_i, f_j> = <e_i, s f_j>`` for ``s``.

    Raises :class:`NotAdjointable` when the linear system has no solution.
    """
    E, F = t.source, t.target
    dE, dF = E.dim, F.dim
    if dE == 0 or dF == 0:
        return ModuleMap(F, E, np.zeros((dE, dF)))
    s2 = E.base.size ** 2
    # rhs[i, j] = <t e_i, f_j>
    rhs = np.einsum("ki,kjpq->ijpq", t.mat, F.gram)
    # unknown y = conj(s): sum_l y[l, j] <e_i, e_l>
    coef = E.gram.transpose(0, 2, 3, 1).reshape(dE * s2, dE)
    b = rhs.transpose(0, 2, 3, 1).reshape(dE * s2, dF)
    y, *_ = np.linalg.lstsq(coef, b, rcond=None)
    resid = _maxabs(coef @ y - b)
    scale = max(1.0, _maxabs(b))
    if resid > tol * scale:
        raise NotAdjointable(f"no adjoint: residual {resid:.3e}")
    return ModuleMap(F, E, y.conj())


def compact_rep(t: ModuleMap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """The vector ``x`` with ``t(b) = x b`` for a map ``t: B -> E``."""
    spec = t.target.base
    x = t.mat @ spec.unit().vec()
    fitted = np.einsum("qij,j->iq", t.target.action, x)
    resid = _maxabs(fitted - t.mat)
    if resid > tol * max(1.0, _maxabs(t.mat)):
        raise NoRepresentative(f"map is not of the form b -> x b (residual {resid:.3e})")
    return x


def map_from_vector(E: ModuleRep, x: np.ndarray) -> ModuleMap:
    """``b -> x b`` as a map from the free module of rank one."""
    return ModuleMap(free_module(E.base), E, np.einsum("qij,j->iq", E.action, x))


def op_norm(t: ModuleMap) -> float:
    if t.mat.size == 0:
        return 0.0
    if t.source.is_orthonormal and t.target.is_orthonormal:
        return spectral_norm(t.mat)
    half_t, _, _ = t.target._gram_factors
    _, inv_half_s, _ = t.source._gram_factors
    return spectral_norm(half_t @ t.mat @ inv_half_s)


def self_adjoint_defect(t: ModuleMap) -> float:
    return _maxabs(t.mat - t.adjoint().mat)


def positive_part_check(t: ModuleMap, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``t`` is a positive operator (self-adjoint, ``<t x, x> >= 0``)."""
    if t.source is not t.target and t.source.dim != t.target.dim:
        return False
    scale = max(1.0, op_norm(t))
    if self_adjoint_defect(t) > tol * scale:
        return False
    return min_eig(t.source.scalar_gram @ t.mat) >= -tol * scale


def hermitian_form(t: ModuleMap) -> np.ndarray:
    """Hermitian matrix whose spectrum is the spectrum of self-adjoint ``t``."""
    if t.source.is_orthonormal:
        m = t.mat
    else:
        half, inv_half, _ = t.source._gram_factors
        m = half @ t.mat @ inv_half
    return (m + m.conj().T) / 2


def spectrum(t: ModuleMap) -> np.ndarray:
    if t.source.dim == 0:
        return np.zeros(0)
    return np.linalg.eigvalsh(hermitian_form(t))


def module_funm(t: ModuleMap, func: Callable[[np.ndarray], np.ndarray]) -> ModuleMap:
    """Functional calculus of a self-adjoint operator on a module."""
    E = t.source
    if E.is_orthonormal:
        return ModuleMap(E, E, hermitian_funm(t.mat, func))
    half, inv_half, _ = E._gram_factors
    return ModuleMap(E, E, inv_half @ hermitian_funm(hermitian_form(t), func) @ half)


def left_mult(c: Element) -> ModuleMap:
    """Left multiplication by ``c`` as an operator on the free module ``B``."""
    F = free_module(c.spec)
    mat = c.spec.dense_to_vec(np.einsum("pq,tqr->tpr", c.mat, c.spec.basis_dense)).T
    return ModuleMap(F, F, mat)


def as_element(t: ModuleMap, tol: float = DEFAULT_TOL) -> Element:
    """The element ``c`` with ``t = left_mult(c)``; ``t`` must act on ``B``."""
    spec = t.source.base
    c = spec.from_vec(t.mat @ spec.unit().vec())
    resid = _maxabs(left_mult(c).mat - t.mat)
    if resid > tol * max(1.0, _maxabs(t.mat)):
        raise NoRepresentative(f"operator is not a left multiplication (residual {resid:.3e})")
    return c


def tensor_module(E1: ModuleRep, E2: ModuleRep) -> ModuleRep:
    """Exterior tensor product over ``B1 (x) B2``; basis ``e_i (x) f_k`` (i-major)."""
    layout = tensor_layout(E1.base, E2.base)
    p1, p2 = layout.vec_pairs
    d1, d2 = E1.dim, E2.dim
    action = np.einsum("qij,qkl->qikjl", E1.action[p1], E2.action[p2]).reshape(-1, d1 * d2, d1 * d2)
    g = layout.kron_dense(E1.gram, E2.gram)  # (d1, d1, d2, d2, S, S)
    s = layout.product.size
    gram = g.transpose(0, 2, 1, 3, 4, 5).reshape(d1 * d2, d1 * d2, s, s)
    return ModuleRep(layout.product, action, gram)


def tensor_map(t1: ModuleMap, t2: ModuleMap, source: ModuleRep | None = None,
               target: ModuleRep | None = None) -> ModuleMap:
    """``t1 (x) t2`` between tensor modules (built on the fly unless given)."""
    source = source or tensor_module(t1.source, t2.source)
    target = target or tensor_module(t1.target, t2.target)
    return ModuleMap(source, target, np.kron(t1.mat, t2.mat))


def free_tensor_permutation(B1: AlgebraSpec, B2: AlgebraSpec) -> np.ndarray:
    """Coordinate change from ``free(B1) (x) free(B2)`` to ``free(B1 (x) B2)``.

    Row ``q`` of the result picks the kron index ``p1 * dim2 + p2``.
    """
    p1, p2 = tensor_layout(B1, B2).vec_pairs
    return p1 * B2.dim + p2
