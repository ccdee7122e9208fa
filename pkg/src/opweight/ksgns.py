"""Operator-valued weights and their KSGNS triplets.

A weight ``phi: A -> B`` is given together with a projection ``p``: its
domain ideal is ``N = A p`` and it is defined on ``M = p A p``.  The triplet
``(E, Lambda, pi)`` consists of a Hilbert ``B``-module ``E``, the map
``Lambda`` sending ``a in N`` to the module map ``b -> Lambda(a) b`` and the
representation ``pi`` of ``A`` on ``E`` with

    <Lambda(a1) b1, Lambda(a2) b2> = b2* phi(a2* a1) b1,
    pi(x) Lambda(a) = Lambda(x a),

and ``Lambda(N) B`` spanning ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import (DEFAULT_TOL, AlgebraSpec, Element, PartialUnitNet, compression_matrix,
                      is_projection, min_eig, orthonormal_span, positive_spanning_set,
                      spectral_norm)
from .cpmap import CpFamilySampler, CpMap
from .errors import NotCompletelyPositive, NotDenselyDefined
from .hmodule import (ModuleMap, ModuleRep, free_module, left_mult, op_norm, zero_module)
from .report import Report

QUOTIENT_RTOL = 1e-10


def domain_basis(p: Element) -> np.ndarray:
    """Orthonormal vec basis (columns) of the left ideal ``A p``."""
    spec = p.spec
    return orthonormal_span(spec.dense_to_vec(spec.basis_dense @ p.mat).T)


def right_support(spec: AlgebraSpec, n_basis: np.ndarray) -> Element:
    """Smallest projection ``q`` with ``a q = a`` for every ``a`` in the span."""
    if n_basis.shape[1] == 0:
        return spec.zero()
    dens = spec.vec_to_dense(n_basis.T)
    cols = np.concatenate([d.conj().T for d in dens], axis=1)
    u = orthonormal_span(cols)
    return Element(spec, u @ u.conj().T)


@dataclass(frozen=True, eq=False)
class Weight:
    """A completely positive map defined on ``p A p``.

    ``coeffs`` is the matrix of ``x -> phi(p x p)`` on matrix-unit coordinates;
    the compression is applied on construction.
    """

    source: AlgebraSpec
    target: AlgebraSpec
    p: Element
    coeffs: np.ndarray

    def __post_init__(self):
        if not is_projection(self.p):
            raise ValueError("domain element p must be a projection")
        c = np.asarray(self.coeffs, dtype=complex).reshape(self.target.dim, self.source.dim)
        c = c @ compression_matrix(self.p)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_cpmap(cls, rho: CpMap, p: Element | None = None) -> "Weight":
        return cls(rho.source, rho.target, p if p is not None else rho.source.unit(), rho.coeffs)

    def as_cpmap(self) -> CpMap:
        return CpMap(self.source, self.target, self.coeffs)

    def __call__(self, x: Element) -> Element:
        return self.target.from_vec(self.coeffs @ x.vec())

    @property
    def densely_defined(self) -> bool:
        return bool(np.abs(self.p.mat - np.eye(self.source.size)).max() < 1e-12)

    @cached_property
    def n_basis(self) -> np.ndarray:
        return domain_basis(self.p)

    def norm(self) -> float:
        """``|phi(p)|``."""
        return spectral_norm(self(self.p).mat)

    def to_json(self) -> dict:
        return {
            "A": self.source.to_json(),
            "B": self.target.to_json(),
            "p": self.p.to_json(),
            "coeffs": {str(q): self.target.from_vec(self.coeffs[:, q]).to_json()
                       for q in range(self.source.dim)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Weight":
        source = AlgebraSpec.from_json(data["A"])
        target = AlgebraSpec.from_json(data["B"])
        p = Element.from_json(source, data["p"]) if "p" in data else source.unit()
        coeffs = np.zeros((target.dim, source.dim), dtype=complex)
        for key, el in data["coeffs"].items():
            coeffs[:, int(key)] = Element.from_json(target, el).vec()
        return cls(source, target, p, coeffs)


@dataclass(frozen=True, eq=False)
class KsgnsTriplet:
    """``(E, Lambda, pi)`` stored on an orthonormal basis ``n_s`` of ``N``.

    ``Lambda[s]`` is the matrix of ``Lambda(n_s): B -> E`` and ``pi[q]`` the
    matrix of ``pi`` at the q-th matrix unit of ``A``.
    """

    source: AlgebraSpec
    E: ModuleRep
    n_basis: np.ndarray
    Lambda: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        d, r = self.E.dim, self.n_basis.shape[1]
        object.__setattr__(self, "Lambda", np.asarray(self.Lambda, dtype=complex).reshape(r, d, self.E.base.dim))
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=complex).reshape(self.source.dim, d, d))

    @property
    def target(self) -> AlgebraSpec:
        return self.E.base

    @property
    def rank(self) -> int:
        return self.n_basis.shape[1]

    @cached_property
    def support(self) -> Element:
        return right_support(self.source, self.n_basis)

    @property
    def densely_defined(self) -> bool:
        return self.rank == self.source.dim

    def domain_coords(self, avec: np.ndarray) -> np.ndarray:
        return self.n_basis.conj().T @ avec

    def domain_defect(self, a: Element) -> float:
        """Distance of ``a`` from the domain ideal."""
        v = a.vec()
        return float(np.linalg.norm(v - self.n_basis @ self.domain_coords(v)))

    def lam_matrix(self, avec: np.ndarray) -> np.ndarray:
        return np.tensordot(self.domain_coords(avec), self.Lambda, axes=(0, 0))

    def lam(self, a: Element) -> ModuleMap:
        return ModuleMap(free_module(self.target), self.E, self.lam_matrix(a.vec()))

    def lam_one(self, avec: np.ndarray) -> np.ndarray:
        """``Lambda(a)`` applied to the unit of ``B``."""
        return self.lam_matrix(avec) @ self.target.unit().vec()

    def lam_one_table(self) -> np.ndarray:
        """Rows ``Lambda(n_s)(1)``, shape ``(r, dim E)``."""
        return self.Lambda @ self.target.unit().vec()

    def pi_of(self, x: Element) -> ModuleMap:
        return ModuleMap(self.E, self.E, np.tensordot(x.vec(), self.pi, axes=(0, 0)))

    def pi_table_on_domain(self) -> np.ndarray:
        return np.tensordot(self.n_basis.T, self.pi, axes=(1, 0))

    def spanning_matrix(self) -> np.ndarray:
        """Columns ``Lambda(n_s) beta_t`` for all domain and matrix-unit pairs."""
        return self.Lambda.transpose(1, 0, 2).reshape(self.E.dim, self.rank * self.target.dim)

    def weight_values(self) -> np.ndarray:
        """``<Lambda(n_s) 1, Lambda(n_u) 1>`` as dense ``B`` matrices, indexed ``[u, s]``."""
        x = self.lam_one_table()
        return np.einsum("si,uj,ijpq->uspq", x, x.conj(), self.E.gram)

    def weight_norm(self) -> float:
        if self.E.dim == 0:
            return 0.0
        y = self.lam_one(self.support.vec())
        return spectral_norm(self.E.inner_dense(y, y))

    def to_json(self) -> dict:
        from .jsonio import matrix_to_json
        return {
            "A": self.source.to_json(),
            "E": self.E.to_json(),
            "N_basis": [self.source.from_vec(c).to_json() for c in self.n_basis.T],
            "Lambda": [matrix_to_json(m) for m in self.Lambda],
            "pi": {str(q): matrix_to_json(self.pi[q]) for q in range(self.source.dim)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "KsgnsTriplet":
        from .jsonio import matrix_from_json
        source = AlgebraSpec.from_json(data["A"])
        E = ModuleRep.from_json(data["E"])
        nb = np.array([Element.from_json(source, e).vec() for e in data["N_basis"]]).T.reshape(source.dim, -1)
        lam = np.array([matrix_from_json(m, (E.dim, E.base.dim)) for m in data["Lambda"]])
        pi = np.zeros((source.dim, E.dim, E.dim), dtype=complex)
        for key, m in data["pi"].items():
            pi[int(key)] = matrix_from_json(m, (E.dim, E.dim))
        return cls(source, E, nb, lam.reshape(nb.shape[1], E.dim, E.base.dim), pi)


def weight_gram(phi: Weight, n_basis: np.ndarray) -> np.ndarray:
    """``Phi[u, s] = phi(n_u* n_s)`` as dense target matrices."""
    dens = phi.source.vec_to_dense(n_basis.T)
    prods = np.einsum("uba,sbc->usac", dens.conj(), dens)
    return phi.target.vec_to_dense(phi.source.dense_to_vec(prods) @ phi.coeffs.T)


def build_canonical_ksgns(phi: Weight, tol: float = DEFAULT_TOL) -> KsgnsTriplet:
    """Quotient of the algebraic tensor product ``N (.) B`` by its null vectors.

    A vector of ``N (.) B`` is written ``sum_s n_s (x) y_s`` with ``y_s in B``;
    the semi-inner product is ``sum y'_u* phi(n_u* n_s) y_s``.  Raises
    :class:`NotCompletelyPositive` if that form is not positive.
    """
    A, B = phi.source, phi.target
    nb = phi.n_basis
    r, S = nb.shape[1], B.size
    Phi = weight_gram(phi, nb)  # (u, s, p, q)
    amp = Phi.transpose(0, 2, 1, 3).reshape(r * S, r * S)
    scale = max(spectral_norm(amp), 1e-300)
    low = min_eig(amp) if r else 0.0
    if low < -tol * max(scale, 1.0) or np.abs(amp - amp.conj().T).max(initial=0.0) > tol * max(scale, 1.0):
        raise NotCompletelyPositive(f"weight is not completely positive (eigenvalue {low:.3e})",
                                    witness={"min_eigenvalue": low})
    E, Y, W = tensor_quotient(B, Phi, B.basis_dense)
    d = E.dim
    if d == 0:
        return KsgnsTriplet(A, E, nb, np.zeros((r, 0, B.dim)), np.zeros((A.dim, 0, 0)))
    Lambda = np.einsum("snab,tba->snt", W, B.basis_dense)
    return KsgnsTriplet(A, E, nb, Lambda, quotient_representation(A, nb, Y, W))


def tensor_quotient(B: AlgebraSpec, Phi: np.ndarray, coeff_basis: np.ndarray):
    """Separated quotient of ``span{n_s (x) c_t}`` for coefficients ``c_t`` in ``B``.

    ``Phi[u, s] = phi(n_u* n_s)``.  The span of the ``c_t`` must be a right
    ideal so that the quotient is a ``B``-module.  Returns the module, the
    coefficient tensor ``Y`` (``e_m = sum_s n_s (x) Y[s, m]``) and
    ``W[s, n] = <n_s (x) 1, e_n>``.
    """
    r, k = Phi.shape[0], coeff_basis.shape[0]
    # scalar Gram tr(c_v* Phi[u,s] c_t), laid out as M[(u,v),(s,t)]
    M = np.einsum("vba,usbc,tca->uvst", coeff_basis.conj(), Phi, coeff_basis, optimize=True).reshape(r * k, r * k)
    M = (M + M.conj().T) / 2
    if M.size:
        vals, vecs = np.linalg.eigh(M)
        top = vals[-1]
        keep = vals > QUOTIENT_RTOL * top if top > 1e-300 else np.zeros(len(vals), bool)
    else:
        vals, vecs, keep = np.zeros(0), np.zeros((0, 0)), np.zeros(0, bool)
    C = vecs[:, keep] / np.sqrt(vals[keep])
    d = C.shape[1]
    S = B.size
    if d == 0:
        return zero_module(B), np.zeros((r, 0, S, S)), np.zeros((r, 0, S, S))
    Y = np.einsum("stm,tpq->smpq", C.reshape(r, k, d), coeff_basis)
    W = np.einsum("unba,usbc->snac", Y.conj(), Phi, optimize=True)
    gram = np.einsum("snab,smbc->mnac", W, Y, optimize=True)  # <e_m, e_n>
    # coordinates of e_m beta_q are tr<e_m beta_q, e_n> = tr(<e_m, e_n> beta_q)
    action = np.einsum("mnab,qba->qnm", gram, B.basis_dense)
    return ModuleRep(B, action, gram), Y, W


def quotient_representation(A: AlgebraSpec, nb: np.ndarray, Y: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Left multiplication ``x (n (x) y) = (x n) (x) y`` on the quotient."""
    dens = A.vec_to_dense(nb.T)
    xn = np.einsum("qab,sbc->qsac", A.basis_dense, dens)
    coef = A.dense_to_vec(xn) @ nb.conj()  # (q, s, s')
    Yx = np.einsum("qsk,smab->qkmab", coef, Y, optimize=True)
    return np.einsum("knab,qkmba->qnm", W, Yx, optimize=True)


def _maxabs(a) -> float:
    return float(np.abs(a).max(initial=0.0))


def unitary_between(t1: KsgnsTriplet, t2: KsgnsTriplet) -> tuple[np.ndarray, dict]:
    """Solve ``U Lambda1(a) b = Lambda2(a) b`` and measure how unitary ``U`` is."""
    X1 = t1.spanning_matrix()
    # express t2's Lambda on t1's domain basis
    lam2 = np.stack([t2.lam_matrix(c) for c in t1.n_basis.T]) if t1.rank else np.zeros((0, t2.E.dim, t2.target.dim))
    X2 = lam2.transpose(1, 0, 2).reshape(t2.E.dim, t1.rank * t2.target.dim)
    res = {}
    if t1.E.dim == 0 or t2.E.dim == 0:
        U = np.zeros((t2.E.dim, t1.E.dim), dtype=complex)
        res["fit"] = _maxabs(X2)
        res["isometry"] = 0.0 if t1.E.dim == t2.E.dim else 1.0
        res["intertwining"] = 0.0
        res["b-linearity"] = 0.0
        return U, res
    U = X2 @ np.linalg.pinv(X1, rcond=1e-12)
    res["fit"] = _maxabs(U @ X1 - X2)
    m1, m2 = t1.E.scalar_gram, t2.E.scalar_gram
    iso = _maxabs(U.conj().T @ m2 @ U - m1)
    co = _maxabs(U @ np.linalg.solve(m1, U.conj().T @ m2) - np.eye(t2.E.dim))
    res["isometry"] = max(iso, co)
    res["intertwining"] = _maxabs(np.einsum("ij,qjk->qik", U, t1.pi) - np.einsum("qij,jk->qik", t2.pi, U))
    res["b-linearity"] = ModuleMap(t1.E, t2.E, U).b_linearity_defect()
    return U, res


def verify_ksgns(phi: Weight, t: KsgnsTriplet, tol: float = DEFAULT_TOL,
                 rng: np.random.Generator | None = None, compare_canonical: bool = True) -> Report:
    """Check every defining property of a triplet for ``phi``.

    Residuals are compared with ``tol * (1 + |phi|)``.
    """
    rng = rng or np.random.default_rng(0)
    A, B, E = phi.source, phi.target, t.E
    thr = tol * (1.0 + phi.norm())
    rep = Report()
    for key, val in E.validate().items():
        rep.bound(f"module/{key}", val, thr)
    # operator identity Lambda(n_u)* Lambda(n_s) = left multiplication by phi(n_u* n_s)
    Phi = weight_gram(phi, t.n_basis)
    F = free_module(B)
    worst = 0.0
    lam_ops = [ModuleMap(F, E, m) for m in t.Lambda]
    for u, lu in enumerate(lam_ops):
        adj = lu.adjoint()
        for s, ls in enumerate(lam_ops):
            worst = max(worst, _maxabs((adj @ ls).mat - left_mult(Element(B, Phi[u, s])).mat))
    rep.bound("inner-product", worst, thr)
    rep.bound("lambda/b-linearity", max([m.b_linearity_defect() for m in lam_ops], default=0.0), thr)
    # density: Lambda(N) B spans E
    X = t.spanning_matrix()
    rank = np.linalg.matrix_rank(X, tol=1e-10 * max(1.0, spectral_norm(X))) if X.size else 0
    rep.bound("density", E.dim - rank, 0, witness={"rank": int(rank), "dim": E.dim})
    # pi is a unital *-homomorphism into L(E) intertwining Lambda
    basis = A.basis_dense
    pis = t.pi
    prod_coef = A.dense_to_vec(np.einsum("iab,jbc->ijac", basis, basis))
    hom = np.einsum("ijk,kab->ijab", prod_coef, pis) - np.einsum("iab,jbc->ijac", pis, pis)
    rep.bound("pi/multiplicative", _maxabs(hom), thr)
    star_coef = A.dense_to_vec(basis.conj().transpose(0, 2, 1))
    adj = np.stack([ModuleMap(E, E, m).adjoint().mat for m in pis]) if E.dim else pis
    rep.bound("pi/adjoint", _maxabs(np.tensordot(star_coef, pis, axes=(1, 0)) - adj), thr)
    rep.bound("pi/unital", _maxabs(t.pi_of(A.unit()).mat - np.eye(E.dim)), thr)
    rep.bound("pi/b-linearity", max([ModuleMap(E, E, m).b_linearity_defect() for m in pis], default=0.0), thr)
    dens = A.vec_to_dense(t.n_basis.T)
    xn = A.dense_to_vec(np.einsum("qab,sbc->qsac", basis, dens))
    inter = 0.0
    for q in range(A.dim):
        for s in range(t.rank):
            inter = max(inter, _maxabs(pis[q] @ t.Lambda[s] - t.lam_matrix(xn[q, s])))
    rep.bound("pi/intertwines-lambda", inter, thr)
    # norm identity |Lambda(a)|^2 = |phi(a* a)| on basis and random domain elements
    samples = [t.n_basis[:, s] for s in range(t.rank)]
    for _ in range(4):
        if t.rank:
            c = rng.standard_normal(t.rank) + 1j * rng.standard_normal(t.rank)
            samples.append(t.n_basis @ c)
    nres = 0.0
    for av in samples:
        a = A.from_vec(av)
        lhs = op_norm(t.lam(a)) ** 2
        rhs = phi(a.H @ a).norm()
        nres = max(nres, abs(lhs - rhs) / (1.0 + rhs))
    rep.bound("norm-identity", nres, thr)
    if compare_canonical:
        canon = build_canonical_ksgns(phi, tol)
        _, ures = unitary_between(t, canon)
        for key, val in ures.items():
            rep.bound(f"uniqueness/{key}", val, thr * 10)
    else:
        rep.skip("uniqueness", "comparison with the canonical triplet not requested")
    return rep


def compactness_criterion(t: KsgnsTriplet, a: Element, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """The vector ``x = Lambda(a)(1)`` representing ``Lambda(a)``, with the
    residual of ``<x, x> = Lambda(a)* Lambda(a)``."""
    from .hmodule import as_element, compact_rep
    lam = t.lam(a)
    x = compact_rep(lam, tol)
    lhs = t.E.inner_dense(x, x)
    rhs = as_element(lam.adjoint() @ lam, max(tol, 1e-9)).mat
    return x, _maxabs(lhs - rhs)


def check_lower_semicontinuity(phi: Weight, sampler: CpFamilySampler, tol: float = DEFAULT_TOL,
                               samples: int = 20, lam_steps: int = 12) -> Report:
    """Lower semicontinuity of ``phi`` through the maps strictly below it.

    Checks that sampled maps stay below ``phi`` on positive elements, that the
    scaled maps ``lam phi`` reach ``phi`` as ``lam -> 1``, and that ``phi``
    converges along the monotone chains ``a* u_i a`` built from partial units.
    """
    if not phi.densely_defined:
        raise NotDenselyDefined("lower semicontinuity checks need p = 1")
    A = phi.source
    rep = Report()
    scale = 1.0 + phi.norm()
    pos = positive_spanning_set(A)
    worst = np.inf
    for _ in range(samples):
        d = sampler.sample()
        for x in pos:
            worst = min(worst, min_eig((phi(x) - d.rho(x)).mat))
    rep.bound("below-weight", max(0.0, -worst), tol * scale, witness={"min_slack": float(worst)})
    gaps = []
    for k in range(1, lam_steps + 1):
        lam = 1.0 - 10.0 ** (-k)
        gaps.append(max(((lam * phi(x)) - phi(x)).norm() for x in pos))
    rep.bound("scaled-limit", gaps[-1], tol * scale, witness={"gaps": [float(g) for g in gaps[:3]]})
    rep.flag("scaled-monotone", all(g2 <= g1 + 1e-15 for g1, g2 in zip(gaps, gaps[1:])))
    net = PartialUnitNet(A)
    rng = sampler.rng
    chain_res = 0.0
    mono = np.inf
    for _ in range(3):
        a = A.random_element(rng)
        vals = [phi(a.H @ u @ a) for u in net]
        for v1, v2 in zip(vals, vals[1:]):
            mono = min(mono, min_eig((v2 - v1).mat))
        chain_res = max(chain_res, (vals[-1] - phi(a.H @ a)).norm())
    rep.bound("chain-limit", chain_res, tol * scale)
    rep.bound("chain-monotone", max(0.0, -mono), tol * scale)
    return rep


def multiplier_extension_check(phi: Weight, t: KsgnsTriplet, tol: float = DEFAULT_TOL) -> Report:
    """For unital algebras the multiplier extension is the weight itself.

    The closure of ``Lambda`` is ``Lambda``, constant nets converge trivially,
    and ``sup_n b* (lam_n phi)(x) b`` reaches ``b* phi(x) b``.
    """
    A = phi.source
    rep = Report()
    scale = 1.0 + phi.norm()
    rep.flag("unital", bool(np.allclose(A.unit().mat, np.eye(A.size))))
    if phi.densely_defined:
        lam1 = t.lam(A.unit())
        rep.bound("extension-at-unit", _maxabs(lam1.adjoint().mat @ lam1.mat - left_mult(phi(A.unit())).mat),
                  tol * scale)
    lam = 1.0 - 1e-9
    gap = 0.0
    for x in positive_spanning_set(A):
        gap = max(gap, ((lam * phi(x)) - phi(x)).norm())
    rep.bound("scaled-supremum", gap, 1e-8 * scale)
    return rep
