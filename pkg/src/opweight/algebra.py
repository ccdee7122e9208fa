"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

An algebra ``A = M_{n_1} + ... + M_{n_K}`` is described by an :class:`AlgebraSpec`
holding the block sizes.  Elements are stored block by block.  Two flat
encodings are used throughout the package:

* the *dense* form, a block-diagonal ``size x size`` matrix, convenient for
  products and spectral calculus;
* the *vec* form, the coordinates in the matrix-unit basis (blocks in order,
  each block row-major), convenient for linear maps between algebras.

The matrix-unit basis is orthonormal for the trace inner product
``(x|y) = tr(y* x)``, so ``vec(y).conj() @ vec(x)`` equals that inner product.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import NotPositive

DEFAULT_TOL = 1e-9


def hermitian_funm(mat: np.ndarray, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``func`` to the spectrum of a Hermitian matrix."""
    if mat.shape[0] == 0:
        return mat.copy()
    herm = (mat + mat.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    return (vecs * func(vals)) @ vecs.conj().T


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a positive matrix, negative eigenvalues clamped to zero."""
    return hermitian_funm(mat, lambda v: np.sqrt(np.clip(v, 0.0, None)))


def min_eig(mat: np.ndarray) -> float:
    if mat.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh((mat + mat.conj().T) / 2)[0])


def spectral_norm(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


@dataclass(frozen=True)
class AlgebraSpec:
    """Block sizes of ``M_{n_1} + ... + M_{n_K}``."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims or any(n < 1 for n in dims):
            raise ValueError(f"block sizes must be positive, got {self.block_dims!r}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def size(self) -> int:
        """Side length of the dense block-diagonal form."""
        return sum(self.block_dims)

    @property
    def dim(self) -> int:
        """Complex vector-space dimension."""
        return sum(n * n for n in self.block_dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.cumsum((0,) + self.block_dims[:-1]))

    @cached_property
    def vec_offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.cumsum((0,) + tuple(n * n for n in self.block_dims[:-1])))

    @cached_property
    def dense_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column of the dense form for every vec coordinate."""
        rows, cols = [], []
        for off, n in zip(self.offsets, self.block_dims):
            r, c = np.divmod(np.arange(n * n), n)
            rows.append(r + off)
            cols.append(c + off)
        return np.concatenate(rows), np.concatenate(cols)

    @cached_property
    def basis_dense(self) -> np.ndarray:
        """Matrix units in dense form, shape ``(dim, size, size)``."""
        out = np.zeros((self.dim, self.size, self.size), dtype=complex)
        rows, cols = self.dense_index
        out[np.arange(self.dim), rows, cols] = 1.0
        return out

    @cached_property
    def block_mask(self) -> np.ndarray:
        mask = np.zeros((self.size, self.size), dtype=bool)
        for off, n in zip(self.offsets, self.block_dims):
            mask[off:off + n, off:off + n] = True
        return mask

    def vec_to_dense(self, vec: np.ndarray) -> np.ndarray:
        """Dense form of one vec (shape ``(dim,)``) or a batch (``(..., dim)``)."""
        vec = np.asarray(vec)
        out = np.zeros(vec.shape[:-1] + (self.size, self.size), dtype=complex)
        rows, cols = self.dense_index
        out[..., rows, cols] = vec
        return out

    def dense_to_vec(self, dense: np.ndarray) -> np.ndarray:
        rows, cols = self.dense_index
        return np.asarray(dense)[..., rows, cols]

    def unit(self) -> "Element":
        return Element.from_dense(self, np.eye(self.size))

    def zero(self) -> "Element":
        return Element.from_dense(self, np.zeros((self.size, self.size)))

    def basis(self) -> list["Element"]:
        return [Element.from_dense(self, m) for m in self.basis_dense]

    def from_vec(self, vec: np.ndarray) -> "Element":
        return Element.from_dense(self, self.vec_to_dense(vec))

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> "Element":
        m = rng.standard_normal((self.size, self.size)) + 1j * rng.standard_normal((self.size, self.size))
        if hermitian:
            m = (m + m.conj().T) / 2
        return Element.from_dense(self, np.where(self.block_mask, m, 0.0))

    def tensor(self, other: "AlgebraSpec") -> "AlgebraSpec":
        """Block sizes of the (spatial) tensor product, pairs ordered row-major."""
        return AlgebraSpec(tuple(n * m for n in self.block_dims for m in other.block_dims))

    def to_json(self) -> dict:
        return {"block_dims": list(self.block_dims)}

    @classmethod
    def from_json(cls, data: dict) -> "AlgebraSpec":
        return cls(tuple(data["block_dims"]))


@dataclass(frozen=True, eq=False)
class Element:
    """An immutable element of a block algebra, kept in dense form."""

    spec: AlgebraSpec
    mat: np.ndarray

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.shape != (self.spec.size, self.spec.size):
            raise ValueError(f"dense shape {m.shape} does not match {self.spec}")
        m[~self.spec.block_mask] = 0.0
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @classmethod
    def from_dense(cls, spec: AlgebraSpec, mat: np.ndarray) -> "Element":
        return cls(spec, mat)

    @classmethod
    def from_blocks(cls, spec: AlgebraSpec, blocks: Sequence[np.ndarray]) -> "Element":
        if len(blocks) != len(spec.block_dims):
            raise ValueError("wrong number of blocks")
        dense = np.zeros((spec.size, spec.size), dtype=complex)
        for off, n, b in zip(spec.offsets, spec.block_dims, blocks):
            b = np.asarray(b, dtype=complex)
            if b.shape != (n, n):
                raise ValueError(f"block of shape {b.shape}, expected {(n, n)}")
            dense[off:off + n, off:off + n] = b
        return cls(spec, dense)

    @property
    def blocks(self) -> tuple[np.ndarray, ...]:
        return tuple(self.mat[o:o + n, o:o + n] for o, n in zip(self.spec.offsets, self.spec.block_dims))

    def dense(self) -> np.ndarray:
        return self.mat

    def vec(self) -> np.ndarray:
        return self.spec.dense_to_vec(self.mat)

    def adjoint(self) -> "Element":
        return Element(self.spec, self.mat.conj().T)

    @property
    def H(self) -> "Element":
        return self.adjoint()

    def _check(self, other: "Element"):
        if other.spec != self.spec:
            raise ValueError(f"algebra mismatch: {self.spec} vs {other.spec}")

    def __add__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.spec, self.mat + other.mat)

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.spec, self.mat - other.mat)

    def __neg__(self) -> "Element":
        return Element(self.spec, -self.mat)

    def __mul__(self, scalar) -> "Element":
        return Element(self.spec, self.mat * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Element":
        return Element(self.spec, self.mat / complex(scalar))

    def __matmul__(self, other: "Element") -> "Element":
        return mul(self, other)

    def norm(self) -> float:
        return norm(self)

    def __repr__(self) -> str:
        return f"Element({self.spec.block_dims}, blocks={[b.tolist() for b in self.blocks]})"

    def to_json(self) -> dict:
        return {"blocks": [[[[float(z.real), float(z.imag)] for z in row] for row in b] for b in self.blocks]}

    @classmethod
    def from_json(cls, spec: AlgebraSpec, data: dict) -> "Element":
        blocks = [np.array([[complex(re, im) for re, im in row] for row in b], dtype=complex).reshape(n, n)
                  for b, n in zip(data["blocks"], spec.block_dims)]
        return cls.from_blocks(spec, blocks)


def mul(x: Element, y: Element) -> Element:
    x._check(y)
    return Element(x.spec, x.mat @ y.mat)


def norm(x: Element) -> float:
    """C*-norm: the largest block operator norm."""
    return spectral_norm(x.mat)


def is_hermitian(x: Element, tol: float = DEFAULT_TOL) -> bool:
    return float(np.abs(x.mat - x.mat.conj().T).max(initial=0.0)) <= tol * max(norm(x), 1e-300)


def is_positive(x: Element, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian and spectrum bounded below by ``-tol * norm(x)``."""
    scale = norm(x)
    if scale == 0.0:
        return True
    if np.abs(x.mat - x.mat.conj().T).max() > tol * scale:
        return False
    return min_eig(x.mat) >= -tol * scale


def funm(x: Element, func: Callable[[np.ndarray], np.ndarray]) -> Element:
    """Continuous functional calculus of a Hermitian element."""
    return Element(x.spec, hermitian_funm(x.mat, func))


def sqrt(x: Element, tol: float = DEFAULT_TOL) -> Element:
    if not is_positive(x, tol):
        raise NotPositive(f"element is not positive (min eigenvalue {min_eig(x.mat):.3e})")
    return Element(x.spec, psd_sqrt(x.mat))


def defect(x: Element) -> Element:
    """``sqrt(|x|^2 - x* x)``; commutes with ``x* x``."""
    s = norm(x)
    return Element(x.spec, psd_sqrt(s * s * np.eye(x.spec.size) - x.mat.conj().T @ x.mat))


def positive_decompose(x: Element) -> tuple[Element, Element, Element, Element]:
    """Four positive elements ``p_k`` with ``x = sum_k i**k p_k``."""
    real = (x.mat + x.mat.conj().T) / 2
    imag = (x.mat - x.mat.conj().T) / 2j
    pos = lambda m: hermitian_funm(m, lambda v: np.clip(v, 0.0, None))
    neg = lambda m: hermitian_funm(m, lambda v: np.clip(-v, 0.0, None))
    return tuple(Element(x.spec, m) for m in (pos(real), pos(imag), neg(real), neg(imag)))


def faithful_trace(x: Element) -> complex:
    """Sum of the unnormalized block traces."""
    return complex(np.trace(x.mat))


def element_tensor(x: Element, y: Element) -> Element:
    spec = x.spec.tensor(y.spec)
    return Element.from_blocks(spec, [np.kron(bx, by) for bx in x.blocks for by in y.blocks])


@dataclass(frozen=True)
class TensorLayout:
    """Index bookkeeping relating ``A1 (x) A2`` to the factors.

    ``vec_pairs[q] = (p1, p2)`` says that matrix unit ``q`` of the product is
    the tensor of matrix units ``p1`` and ``p2``; ``dense_perm[k]`` sends the
    index ``k`` of ``kron(dense1, dense2)`` to the dense index of the product.
    """

    left: AlgebraSpec
    right: AlgebraSpec

    @cached_property
    def product(self) -> AlgebraSpec:
        return self.left.tensor(self.right)

    @cached_property
    def vec_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        p1s, p2s = [], []
        for k, n in enumerate(self.left.block_dims):
            for l, m in enumerate(self.right.block_dims):
                idx = np.arange(n * m * n * m)
                r, c = np.divmod(idx, n * m)
                r1, r2 = np.divmod(r, m)
                c1, c2 = np.divmod(c, m)
                p1s.append(self.left.vec_offsets[k] + r1 * n + c1)
                p2s.append(self.right.vec_offsets[l] + r2 * m + c2)
        return np.concatenate(p1s), np.concatenate(p2s)

    @cached_property
    def dense_perm(self) -> np.ndarray:
        s2 = self.right.size
        perm = np.empty(self.left.size * s2, dtype=int)
        pos = 0
        for k, n in enumerate(self.left.block_dims):
            for l, m in enumerate(self.right.block_dims):
                r1, r2 = np.divmod(np.arange(n * m), m)
                perm[(self.left.offsets[k] + r1) * s2 + self.right.offsets[l] + r2] = pos + np.arange(n * m)
                pos += n * m
        return perm

    def kron_dense(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Dense product-algebra form of ``x (x) y`` for dense factor matrices.

        Leading batch axes of ``x`` and ``y`` are combined as an outer product.
        """
        bx, by = x.shape[:-2], y.shape[:-2]
        k = np.einsum("...pq,...rs->...prqs",
                      x.reshape(bx + (1,) * len(by) + x.shape[-2:]),
                      y.reshape((1,) * len(bx) + by + y.shape[-2:]))
        s = self.left.size * self.right.size
        k = k.reshape(bx + by + (s, s))
        out = np.zeros_like(k)
        perm = self.dense_perm
        out[..., perm[:, None], perm[None, :]] = k
        return out


def tensor_layout(left: AlgebraSpec, right: AlgebraSpec) -> TensorLayout:
    return TensorLayout(left, right)


@dataclass(frozen=True)
class PartialUnitNet:
    """Increasing central projections ``u_i`` = unit of the first ``i`` blocks.

    The index runs over ``start, ..., K`` where ``K`` is the number of blocks,
    so the final element is the unit of the algebra.
    """

    spec: AlgebraSpec
    start: int = 1

    def __post_init__(self):
        if not 1 <= self.start <= len(self.spec.block_dims):
            raise ValueError("start index out of range")

    def __len__(self) -> int:
        return len(self.spec.block_dims) - self.start + 1

    def __getitem__(self, i: int) -> Element:
        if not 0 <= i < len(self):
            raise IndexError(i)
        cut = self.spec.offsets[self.start - 1 + i] + self.spec.block_dims[self.start - 1 + i]
        d = np.zeros(self.spec.size)
        d[:cut] = 1.0
        return Element(self.spec, np.diag(d))

    def __iter__(self) -> Iterator[Element]:
        return (self[i] for i in range(len(self)))


def orthonormal_span(cols: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the column space, via SVD with a relative cut."""
    cols = np.asarray(cols, dtype=complex)
    if cols.size == 0:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    return u[:, s > rtol * s[0]]


def compression_matrix(p: Element) -> np.ndarray:
    """Matrix of ``x -> p x p`` on vec coordinates."""
    spec = p.spec
    return spec.dense_to_vec(p.mat @ spec.basis_dense @ p.mat).T


def is_projection(p: Element, tol: float = DEFAULT_TOL) -> bool:
    m = p.mat
    return float(np.abs(m @ m - m).max()) <= tol and float(np.abs(m - m.conj().T).max()) <= tol


def positive_spanning_set(spec: AlgebraSpec) -> list[Element]:
    """Rank-one projections spanning the algebra linearly."""
    out = []
    for off, n in zip(spec.offsets, spec.block_dims):
        for i in range(n):
            for j in range(i, n):
                vecs = [np.eye(n)[i]] if i == j else [
                    (np.eye(n)[i] + np.eye(n)[j]) / np.sqrt(2),
                    (np.eye(n)[i] + 1j * np.eye(n)[j]) / np.sqrt(2)]
                for v in vecs:
                    d = np.zeros((spec.size, spec.size), dtype=complex)
                    d[off:off + n, off:off + n] = np.outer(v, v.conj())
                    out.append(Element(spec, d))
    return out


def commutant(generators: Sequence[np.ndarray], dim: int, rtol: float = 1e-10) -> np.ndarray:
    """Basis ``(k, dim, dim)`` of the matrices commuting with every generator.

    The null space of ``Z -> [Z, g]`` is read off the Gram matrix of the
    stacked commutator maps, which stays ``dim^2 x dim^2`` however many
    generators are given.
    """
    if dim == 0:
        return np.zeros((0, 0, 0), dtype=complex)
    eye = np.eye(dim)
    gram = np.zeros((dim * dim, dim * dim), dtype=complex)
    for g in generators:
        c = np.kron(eye, g.T) - np.kron(g, eye)
        gram += c.conj().T @ c
    vals, vecs = np.linalg.eigh(gram)
    top = max(vals[-1], 1.0)
    keep = vals <= rtol * top
    return vecs[:, keep].T.reshape(-1, dim, dim)


def squeeze_to_unit_interval(h: np.ndarray, top: float) -> np.ndarray:
    """Affine image of a Hermitian matrix with spectrum ``[0, top]``.

    A (numerically) scalar ``h`` is sent to ``top`` times the identity, so
    rounding noise is never blown up to order one.
    """
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    spread = vals[-1] - vals[0]
    if spread <= 1e-8 * max(1.0, np.abs(vals).max()):
        return top * np.eye(len(vals))
    vals = (vals - vals[0]) / spread * top
    return (vecs * vals) @ vecs.conj().T
