"""Completely positive maps and the maps dominated by a KSGNS triplet.

A map ``rho`` is *dominated* by the triplet ``(E, Lambda, pi)`` when

    rho(a2* a1) = Lambda(a2)* T Lambda(a1)

for a positive ``T`` in the commutant of ``pi(A)`` inside ``L(E)``.  Such maps
are ordered by their operators ``T``.  Within that family ``T <= 1`` marks the
maps below the weight and ``T <= lam * 1`` with ``lam < 1`` the maps strictly
below it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import (DEFAULT_TOL, AlgebraSpec, Element, commutant, min_eig, spectral_norm,
                      squeeze_to_unit_interval, tensor_layout)
from .errors import GammaOutOfRange, NotDenselyDefined, NotInH, NotPositive
from .hmodule import (ModuleMap, hilbert_adjoint, identity_map, map_from_vector, module_funm,
                      positive_part_check, spectrum)


@dataclass(frozen=True, eq=False)
class CpMap:
    """A linear map between block algebras, stored on matrix-unit coordinates.

    ``coeffs[:, q]`` is the vec form of the image of the q-th matrix unit.
    Complete positivity is not enforced; see :func:`is_completely_positive`.
    """

    source: AlgebraSpec
    target: AlgebraSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(self.target.dim, self.source.dim)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x: Element) -> Element:
        return self.target.from_vec(self.coeffs @ x.vec())

    def apply_dense(self, dense: np.ndarray) -> np.ndarray:
        """Apply to a batch of dense source matrices (``(..., S, S)``)."""
        return self.target.vec_to_dense(self.source.dense_to_vec(dense) @ self.coeffs.T)

    def __add__(self, other: "CpMap") -> "CpMap":
        return CpMap(self.source, self.target, self.coeffs + other.coeffs)

    def __sub__(self, other: "CpMap") -> "CpMap":
        return CpMap(self.source, self.target, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "CpMap":
        return CpMap(self.source, self.target, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def norm(self) -> float:
        """``|rho(1)|``, the norm of a completely positive map on a unital algebra."""
        return spectral_norm(self(self.source.unit()).mat)

    def tensor(self, other: "CpMap") -> "CpMap":
        lay_s = tensor_layout(self.source, other.source)
        lay_t = tensor_layout(self.target, other.target)
        ps1, ps2 = lay_s.vec_pairs
        pt1, pt2 = lay_t.vec_pairs
        coeffs = self.coeffs[pt1][:, ps1] * other.coeffs[pt2][:, ps2]
        return CpMap(lay_s.product, lay_t.product, coeffs)

    @classmethod
    def from_function(cls, source: AlgebraSpec, target: AlgebraSpec,
                      func: Callable[[Element], Element]) -> "CpMap":
        return cls(source, target, np.stack([func(b).vec() for b in source.basis()], axis=1))

    @classmethod
    def from_kraus(cls, source: AlgebraSpec, target: AlgebraSpec, kraus: Sequence[np.ndarray]) -> "CpMap":
        """``x -> P(sum K* x K)`` with dense ``K`` of shape ``(source.size, target.size)``.

        ``P`` cuts the result down to the block diagonal of the target, which
        keeps the map completely positive.
        """
        acc = np.zeros((source.dim, target.size, target.size), dtype=complex)
        for k in kraus:
            acc += np.einsum("ap,qab,bs->qps", k.conj(), source.basis_dense, k)
        return cls(source, target, target.dense_to_vec(acc).T)

    @classmethod
    def identity(cls, spec: AlgebraSpec) -> "CpMap":
        return cls(spec, spec, np.eye(spec.dim))

    def to_json(self) -> dict:
        return {
            "A": self.source.to_json(),
            "B": self.target.to_json(),
            "coeffs": {str(q): self.target.from_vec(self.coeffs[:, q]).to_json()
                       for q in range(self.source.dim)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "CpMap":
        source = AlgebraSpec.from_json(data["A"])
        target = AlgebraSpec.from_json(data["B"])
        coeffs = np.zeros((target.dim, source.dim), dtype=complex)
        for key, el in data["coeffs"].items():
            coeffs[:, int(key)] = Element.from_json(target, el).vec()
        return cls(source, target, coeffs)


def transpose_map(spec: AlgebraSpec, block: int = 0) -> CpMap:
    """Transpose on one block, identity elsewhere (positive, not completely positive)."""
    def func(x):
        blocks = list(x.blocks)
        blocks[block] = blocks[block].T
        return Element.from_blocks(spec, blocks)
    return CpMap.from_function(spec, spec, func)


# ---------------------------------------------------------------- positivity

def amplified_gram(rho: CpMap) -> np.ndarray:
    """``G[(j,p),(i,q)] = rho(e_j* e_i)[p, q]`` over the matrix units ``e_i``."""
    basis = rho.source.basis_dense
    prods = np.einsum("jba,ibc->jiac", basis.conj(), basis)
    vals = rho.apply_dense(prods)  # (j, i, S, S)
    n, s = rho.source.dim, rho.target.size
    return vals.transpose(0, 2, 1, 3).reshape(n * s, n * s)


@dataclass(frozen=True)
class CpWitness:
    """Tuple ``(a_i, b_i)`` with ``sum_ij b_j* rho(a_j* a_i) b_i`` not positive."""

    min_eigenvalue: float
    a: tuple[Element, ...]
    b: tuple[Element, ...]

    def evaluate(self, rho: CpMap) -> Element:
        total = np.zeros((rho.target.size, rho.target.size), dtype=complex)
        for ai, bi in zip(self.a, self.b):
            for aj, bj in zip(self.a, self.b):
                total += bj.mat.conj().T @ rho(aj.H @ ai).mat @ bi.mat
        return Element(rho.target, total)


def cp_witness(rho: CpMap) -> CpWitness:
    """Most negative direction of the amplified Gram, as an explicit tuple."""
    g = amplified_gram(rho)
    g = (g + g.conj().T) / 2
    vals, vecs = np.linalg.eigh(g)
    v = vecs[:, 0]
    n, s = rho.source.dim, rho.target.size
    seg = v.reshape(n, s)
    bs = []
    for i in range(n):
        d = np.zeros((s, s), dtype=complex)
        for off, m in zip(rho.target.offsets, rho.target.block_dims):
            d[off:off + m, off] = seg[i, off:off + m]
        bs.append(Element(rho.target, d))
    return CpWitness(float(vals[0]), tuple(rho.source.basis()), tuple(bs))


def is_completely_positive(rho: CpMap, tol: float = DEFAULT_TOL) -> bool:
    g = amplified_gram(rho)
    scale = spectral_norm(g)
    if scale == 0.0:
        return True
    if np.abs(g - g.conj().T).max() > tol * scale:
        return False
    return min_eig(g) >= -tol * scale


def choi_kraus(rho: CpMap) -> tuple[list[np.ndarray], float]:
    """Kraus operators read off the block Choi matrices.

    Returns the operators built from the non-negative part of each Choi matrix
    and the most negative Choi eigenvalue (zero for completely positive maps).
    """
    A, B = rho.source, rho.target
    kraus, worst = [], 0.0
    for ka, (oa, n) in enumerate(zip(A.offsets, A.block_dims)):
        units = A.basis_dense[A.vec_offsets[ka]:A.vec_offsets[ka] + n * n]
        imgs = rho.apply_dense(units)  # e_ij -> rho(e_ij)
        for ob, m in zip(B.offsets, B.block_dims):
            blk = imgs[:, ob:ob + m, ob:ob + m].reshape(n, n, m, m)
            choi = blk.transpose(0, 2, 1, 3).reshape(n * m, n * m)
            vals, vecs = np.linalg.eigh((choi + choi.conj().T) / 2)
            worst = min(worst, float(vals[0]))
            for lam, u in zip(vals, vecs.T):
                if lam <= 0:
                    continue
                k = np.zeros((A.size, B.size), dtype=complex)
                k[oa:oa + n, ob:ob + m] = np.sqrt(lam) * u.conj().reshape(n, m)
                kraus.append(k)
    return kraus, worst


def dilation_residual(rho: CpMap) -> float:
    """How far ``rho`` is from the map rebuilt out of its positive Choi part."""
    kraus, _ = choi_kraus(rho)
    rebuilt = CpMap.from_kraus(rho.source, rho.target, kraus)
    return float(np.abs(rebuilt.coeffs - rho.coeffs).max(initial=0.0))


def sampled_min_eigenvalue(rho: CpMap, rng: np.random.Generator, tuples: int = 1000,
                           length: int | None = None) -> float:
    """Smallest eigenvalue of ``sum_ij b_j* rho(a_j* a_i) b_i`` over random tuples.

    Each sum is normalized by ``sum_i |a_i|^2 |b_i|^2`` so that values are
    comparable across draws.
    """
    A, B = rho.source, rho.target
    length = length or max(A.block_dims)
    shape_a = (tuples, length, A.size, A.size)
    shape_b = (tuples, length, B.size, B.size)
    a = (rng.standard_normal(shape_a) + 1j * rng.standard_normal(shape_a)) * A.block_mask
    b = (rng.standard_normal(shape_b) + 1j * rng.standard_normal(shape_b)) * B.block_mask
    vals = rho.apply_dense(np.einsum("njba,nibc->njiac", a.conj(), a, optimize=True))
    total = np.einsum("njba,njibc,nicd->nad", b.conj(), vals, b, optimize=True)
    total = (total + total.conj().transpose(0, 2, 1)) / 2
    scale = (np.linalg.norm(a, 2, axis=(2, 3)) ** 2 * np.linalg.norm(b, 2, axis=(2, 3)) ** 2).sum(axis=1)
    return float((np.linalg.eigvalsh(total)[:, 0] / scale).min())


def order_leq(rho1: CpMap, rho2: CpMap, tol: float = DEFAULT_TOL) -> bool:
    """``rho1 <= rho2`` in the completely positive order."""
    return is_completely_positive(rho2 - rho1, tol)


# ----------------------------------------------------------- dominated maps

@dataclass(frozen=True, eq=False)
class DominatedMap:
    """A map together with its operator ``T`` and a vector ``v`` implementing it.

    ``v: B -> E`` satisfies ``T^(1/2) Lambda(a) = pi(a) v`` and hence
    ``rho(x) = v* pi(x) v``.
    """

    rho: CpMap
    T: ModuleMap
    v: ModuleMap | None = None
    nullity: int = 0
    residuals: dict = field(default_factory=dict)


def _require_dense(triplet):
    if triplet.n_basis.shape[1] != triplet.source.dim:
        raise NotDenselyDefined("the domain ideal is not the whole algebra")


def rho_from_T(triplet, T: ModuleMap) -> CpMap:
    """The map ``x -> Lambda(q)* T Lambda(q x q)``, ``q`` the support of the domain."""
    A = triplet.source
    E = triplet.E
    q = triplet.support
    comp = A.dense_to_vec(q.mat @ A.basis_dense @ q.mat)  # (dimA basis, dimA)
    coords = comp @ triplet.n_basis.conj()  # (basis, r)
    lam1 = triplet.lam_one_table()  # (r, dE)
    xs = coords @ lam1  # (basis, dE)
    y = triplet.lam_one(q.vec())
    tx = xs @ T.mat.T
    vals = np.einsum("ki,j,ijpq->kpq", tx, y.conj(), E.gram)
    return CpMap(A, E.base, E.base.dense_to_vec(vals).T)


def extract_v(triplet, T: ModuleMap, tol: float = DEFAULT_TOL) -> tuple[ModuleMap, float]:
    """Solve ``pi(a) v(1) = T^(1/2) Lambda(a)(1)`` over the domain basis."""
    E = triplet.E
    root = module_funm(T, lambda s: np.sqrt(np.clip(s, 0.0, None)))
    lam1 = triplet.lam_one_table()  # (r, dE)
    pis = triplet.pi_table_on_domain()  # (r, dE, dE)
    lhs = pis.reshape(-1, E.dim)
    rhs = (lam1 @ root.mat.T).reshape(-1)
    if E.dim == 0:
        return map_from_vector(E, np.zeros(0)), 0.0
    y, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    resid = float(np.abs(lhs @ y - rhs).max(initial=0.0))
    return map_from_vector(E, y), resid


def commutator_defect(triplet, T: ModuleMap) -> float:
    """``max_x |T pi(x) - pi(x) T|`` over matrix units, plus the B-linearity defect."""
    pis = triplet.pi
    d = np.einsum("ij,qjk->qik", T.mat, pis) - np.einsum("qij,jk->qik", pis, T.mat)
    return max(float(np.abs(d).max(initial=0.0)), T.b_linearity_defect())


def solve_T(rho: CpMap, triplet, tol: float = 1e-8) -> DominatedMap:
    """Find ``T`` with ``rho(a2* a1) = Lambda(a2)* T Lambda(a1)``.

    The operator is sought among self-adjoint maps by least squares (minimum
    norm).  Raises :class:`NotInH` when no such ``T`` exists, when it is not
    positive, or when it fails to commute with ``pi(A)``.
    """
    _require_dense(triplet)
    E = triplet.E
    d = E.dim
    scale = max(1.0, rho.norm(), triplet.weight_norm())
    if d == 0:
        resid = float(np.abs(rho.coeffs).max(initial=0.0))
        if resid > tol * scale:
            raise NotInH(f"weight vanishes but the map does not (residual {resid:.3e})")
        T = ModuleMap(E, E, np.zeros((0, 0)))
        return DominatedMap(rho, T, map_from_vector(E, np.zeros(0)), 0, {"fit": resid})
    xs = triplet.lam_one_table()  # (r, d)
    # w[u, i] = sum_j conj(x_u[j]) <e_i, e_j>
    w = np.einsum("uj,ijpq->uipq", xs.conj(), E.gram)
    tb = E.self_adjoint_basis
    k = len(tb)
    tx = np.einsum("kic,sc->ksi", tb, xs)
    design = np.einsum("ksi,uipq->uspqk", tx, w, optimize=True)
    nbasis = triplet.n_basis
    dens = triplet.source.vec_to_dense(nbasis.T)  # (r, S, S)
    prods = np.einsum("uba,sbc->usac", dens.conj(), dens)
    target = rho.apply_dense(prods)  # (u, s, p, q)
    m = design.reshape(-1, k)
    rhs = target.reshape(-1)
    real_m = np.concatenate([m.real, m.imag])
    real_rhs = np.concatenate([rhs.real, rhs.imag])
    h, _, rank, _ = np.linalg.lstsq(real_m, real_rhs, rcond=None)
    fit = float(np.abs(m @ h - rhs).max(initial=0.0))
    T = ModuleMap(E, E, np.tensordot(h, tb, axes=(0, 0)))
    residuals = {"fit": fit}
    if fit > tol * scale:
        raise NotInH(f"no self-adjoint T reproduces the map (residual {fit:.3e})")
    low = float(spectrum(T)[0])
    residuals["positivity"] = max(0.0, -low)
    if low < -tol * scale:
        raise NotInH(f"T is not positive (min eigenvalue {low:.3e})")
    comm = commutator_defect(triplet, T)
    residuals["commutant"] = comm
    if comm > tol * scale:
        raise NotInH(f"T is not in the commutant of pi(A) (defect {comm:.3e})")
    v, vres = extract_v(triplet, T, tol)
    residuals["v"] = vres
    return DominatedMap(rho, T, v, int(k - rank), residuals)


def dominated_from_T(triplet, T: ModuleMap) -> DominatedMap:
    v, vres = extract_v(triplet, T)
    return DominatedMap(rho_from_T(triplet, T), T, v, 0, {"v": vres})


def order_leq_via_T(d1: DominatedMap, d2: DominatedMap, tol: float = DEFAULT_TOL) -> bool:
    return positive_part_check(d2.T - d1.T, tol)


def commutant_basis(triplet) -> np.ndarray:
    """Basis of operators commuting with ``pi(A)`` and with the right action."""
    E = triplet.E
    return commutant(list(triplet.pi) + list(E.action), E.dim)


class CpFamilySampler:
    """Random maps dominated by a triplet with ``0 <= T <= lam``.

    ``lam = 1`` samples maps below the weight, ``lam < 1`` maps strictly below
    it.  Draws are reproducible from ``seed``.
    """

    def __init__(self, triplet, lam: float = 1.0, seed: int = 0):
        if not 0.0 <= lam <= 1.0:
            raise ValueError("scale must lie in [0, 1]")
        self.triplet = triplet
        self.lam = float(lam)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self._basis = commutant_basis(triplet) if triplet.E.dim else np.zeros((0, 0, 0))

    def sample_T(self) -> ModuleMap:
        E = self.triplet.E
        d = E.dim
        if d == 0:
            return ModuleMap(E, E, np.zeros((0, 0)))
        n = len(self._basis)
        coef = self.rng.standard_normal(n) + 1j * self.rng.standard_normal(n)
        z = np.tensordot(coef, self._basis, axes=(0, 0))
        h = (z + hilbert_adjoint(z, E, E)) / 2
        # work in scalar-orthonormal coordinates, where self-adjoint means Hermitian
        half, inv_half, _ = E._gram_factors
        s = self.rng.uniform(0.3, 1.0)
        t = inv_half @ squeeze_to_unit_interval(half @ h @ inv_half, s) @ half
        return ModuleMap(E, E, self.lam * t)

    def sample(self) -> DominatedMap:
        return dominated_from_T(self.triplet, self.sample_T())

    def __iter__(self):
        while True:
            yield self.sample()


@dataclass(frozen=True, eq=False)
class JoinResult:
    dominated: DominatedMap
    gamma: float
    lam: float
    slacks: dict


def directed_join(d1: DominatedMap, d2: DominatedMap, triplet, lams: tuple[float, float] = (0.0, 0.0),
                  gamma: float | None = None, tol: float = DEFAULT_TOL) -> JoinResult:
    """A common upper bound of ``lam1 rho1`` and ``lam2 rho2`` for ``0 <= T_k <= 1``.

    With ``S_k = gamma T_k (1 - gamma T_k)^-1`` the operator
    ``T = (S_1 + S_2)(1 + S_1 + S_2)^-1`` satisfies
    ``gamma T_k <= T <= gamma / (1 - gamma) (T_1 + T_2)`` and ``T <= 1``, so
    ``lam rho_T`` with ``lam = max(lam_k) / gamma`` dominates both inputs.
    """
    lam1, lam2 = lams
    top = max(lam1, lam2)
    if not (0.0 <= lam1 < 1.0 and 0.0 <= lam2 < 1.0):
        raise GammaOutOfRange(f"scales {lams} must lie in [0, 1)")
    for d in (d1, d2):
        ev = spectrum(d.T)
        if ev.size and (ev[0] < -tol or ev[-1] > 1.0 + tol):
            raise GammaOutOfRange(f"operator spectrum [{ev[0]:.6g}, {ev[-1]:.6g}] is not inside [0, 1]")
    if gamma is None:
        gamma = (1.0 + top) / 2.0
    if not (top < gamma < 1.0):
        raise GammaOutOfRange(f"gamma={gamma} must lie strictly between {top:.6g} and 1")
    cayley = lambda t: gamma * t / (1.0 - gamma * t)
    s_sum = module_funm(d1.T, cayley) + module_funm(d2.T, cayley)
    T = module_funm(s_sum, lambda s: s / (1.0 + s))
    lam = top / gamma
    low = lambda op: float(spectrum(op)[0]) if op.source.dim else 0.0
    slacks = {
        "above-first": low(T - gamma * d1.T),
        "above-second": low(T - gamma * d2.T),
        "below-sum": low((gamma / (1 - gamma)) * (d1.T + d2.T) - T),
        "below-one": low(identity_map(T.source) - T),
        "dominates-first": low(lam * T - lam1 * d1.T),
        "dominates-second": low(lam * T - lam2 * d2.T),
    }
    return JoinResult(dominated_from_T(triplet, T), float(gamma), float(lam), slacks)


def cayley_monotone(T1: ModuleMap, T2: ModuleMap, tol: float = DEFAULT_TOL) -> float:
    """``min spec(f(T2) - f(T1))`` for ``f(t) = t / (1 + t)`` and ``0 <= T1 <= T2``."""
    if not positive_part_check(T1, tol):
        raise NotPositive("first operator is not positive")
    if not positive_part_check(T2 - T1, tol):
        raise NotPositive("operators are not ordered")
    f = lambda t: t / (1.0 + t)
    return float(spectrum(module_funm(T2, f) - module_funm(T1, f))[0])


def gs_limit_check(phi: CpMap, x: Element, b: Element, eps: float) -> tuple[float, float, bool]:
    """Scale ``lam`` close to 1 with ``|b* (lam phi)(x) b - b* phi(x) b| <= eps``.

    Returns ``(lam, residual, ok)``; ``lam phi`` lies strictly below ``phi``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    target = b.H @ phi(x) @ b
    lam = 1.0 - eps / (2.0 * (target.norm() + 1.0))
    resid = ((lam * target) - target).norm()
    return lam, resid, bool(resid <= eps)
