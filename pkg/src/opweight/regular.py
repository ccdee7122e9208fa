"""Weights rebuilt from seed data, truncating nets and the quotient module.

Seed data consists of a module ``E``, a spanning set ``N0`` of a left ideal,
module maps ``Lambda0(n): B -> E`` and a family ``(T_i, rho_i)`` with

    b2* rho_i(a2* a1) b1 = <T_i Lambda0(a1) b1, Lambda0(a2) b2>,

ending with ``T = 1``.  From it one recovers a representation ``pi`` and a
weight ``phi(sum b_j* a_j) = sum Lambda(b_j)* Lambda(a_j)`` whose KSGNS
triplet is the seed itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (DEFAULT_TOL, AlgebraSpec, Element, min_eig, orthonormal_span,
                      positive_spanning_set, spectral_norm)
from .cpmap import (CpFamilySampler, CpMap, commutator_defect, extract_v, is_completely_positive,
                    rho_from_T)
from .errors import (IllDefined, NotDenselyDefined, NotSurjective, SeedInconsistent,
                     ZeroLambdaExactMode)
from .hmodule import ModuleMap, ModuleRep, free_module, left_mult, op_norm
from .ksgns import (KsgnsTriplet, Weight, build_canonical_ksgns, quotient_representation,
                    tensor_quotient, verify_ksgns, weight_gram)
from .report import Report


def _maxabs(a) -> float:
    return float(np.abs(a).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class SeedData:
    """``N0`` as vec columns, ``Lambda0`` one ``dim E x dim B`` matrix per column."""

    source: AlgebraSpec
    E: ModuleRep
    N0: np.ndarray
    Lambda0: np.ndarray
    family: tuple[tuple[ModuleMap, CpMap], ...]

    def __post_init__(self):
        n0 = np.asarray(self.N0, dtype=complex).reshape(self.source.dim, -1)
        object.__setattr__(self, "N0", n0)
        object.__setattr__(self, "Lambda0", np.asarray(self.Lambda0, dtype=complex).reshape(
            n0.shape[1], self.E.dim, self.E.base.dim))
        object.__setattr__(self, "family", tuple(self.family))

    def to_json(self) -> dict:
        from .jsonio import matrix_to_json
        return {
            "A": self.source.to_json(),
            "E": self.E.to_json(),
            "N0": [self.source.from_vec(c).to_json() for c in self.N0.T],
            "Lambda0": [matrix_to_json(m) for m in self.Lambda0],
            "family": [{"T": matrix_to_json(T.mat), "rho": rho.to_json()} for T, rho in self.family],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SeedData":
        from .jsonio import matrix_from_json
        A = AlgebraSpec.from_json(data["A"])
        E = ModuleRep.from_json(data["E"])
        n0 = np.array([Element.from_json(A, e).vec() for e in data["N0"]]).T.reshape(A.dim, -1)
        lam = np.array([matrix_from_json(m, (E.dim, E.base.dim)) for m in data["Lambda0"]])
        fam = tuple((ModuleMap(E, E, matrix_from_json(f["T"], (E.dim, E.dim))), CpMap.from_json(f["rho"]))
                    for f in data["family"])
        return cls(A, E, n0, lam.reshape(n0.shape[1], E.dim, E.base.dim), fam)


def seed_from_triplet(t: KsgnsTriplet, Ts: Sequence[ModuleMap] = ()) -> SeedData:
    """Seed with ``N0`` the domain basis of ``t`` and family ``Ts`` followed by 1."""
    E = t.E
    Ts = list(Ts) + [ModuleMap(E, E, np.eye(E.dim))]
    return SeedData(t.source, E, t.n_basis, t.Lambda, tuple((T, rho_from_T(t, T)) for T in Ts))


def close_lambda(seed: SeedData, tol: float = DEFAULT_TOL) -> KsgnsTriplet:
    """Extend ``Lambda0`` linearly to the ideal spanned by ``N0`` and build ``pi``.

    Raises :class:`SeedInconsistent` when ``N0`` does not span a left ideal,
    ``Lambda0`` is not linear on the span (not closable), the family violates
    its defining identity, the last operator is not 1, or ``pi`` does not exist.
    """
    A, E = seed.source, seed.E
    B = E.base
    scale = max(1.0, _maxabs(seed.Lambda0))
    thr = tol * scale * scale
    Q = orthonormal_span(seed.N0)
    r = Q.shape[1]
    dens = A.vec_to_dense(Q.T)
    left = A.dense_to_vec(np.einsum("qab,sbc->qsac", A.basis_dense, dens))
    out = left - np.einsum("qsk,kj->qsj", np.einsum("qsk,kj->qsj", left, Q.conj()), Q.T)
    if _maxabs(out) > 1e-9:
        raise SeedInconsistent(f"N0 does not span a left ideal (defect {_maxabs(out):.3e})")
    coef = Q.conj().T @ seed.N0  # n_k = sum_s coef[s, k] Q_s
    L0 = seed.Lambda0.reshape(seed.N0.shape[1], -1)
    if r:
        lam, *_ = np.linalg.lstsq(coef.T, L0, rcond=None)
    else:
        lam = np.zeros((0, L0.shape[1]))
    closure = _maxabs(coef.T @ lam - L0)
    if closure > tol * scale:
        raise SeedInconsistent(f"Lambda0 is not linear on span(N0) (defect {closure:.3e})")
    Lambda = lam.reshape(r, E.dim, B.dim)
    base = KsgnsTriplet(A, E, Q, Lambda, np.zeros((A.dim, E.dim, E.dim)))
    if not seed.family:
        raise SeedInconsistent("empty operator family")
    last = seed.family[-1][0]
    if _maxabs(last.mat - np.eye(E.dim)) > tol:
        raise SeedInconsistent("the family must end with the identity operator")
    F = free_module(B)
    prods = np.einsum("uba,sbc->usac", dens.conj(), dens)
    worst = 0.0
    for T, rho in seed.family:
        vals = rho.apply_dense(prods)
        for u in range(r):
            adj = ModuleMap(F, E, Lambda[u]).adjoint().mat @ T.mat
            for s in range(r):
                worst = max(worst, _maxabs(adj @ Lambda[s] - left_mult(Element(B, vals[u, s])).mat))
    if worst > thr:
        raise SeedInconsistent(f"family violates <T Lambda(a1) b1, Lambda(a2) b2> = b2* rho(a2* a1) b1 "
                               f"(residual {worst:.3e})")
    X = base.spanning_matrix()
    if E.dim == 0:
        return base
    rank = np.linalg.matrix_rank(X, tol=1e-10 * max(1.0, spectral_norm(X)))
    if rank < E.dim:
        raise SeedInconsistent(f"Lambda(N) B spans a {rank}-dimensional part of the {E.dim}-dimensional module")
    Xp = np.linalg.pinv(X, rcond=1e-12)
    pi = np.empty((A.dim, E.dim, E.dim), dtype=complex)
    fit = 0.0
    for q in range(A.dim):
        Y = np.stack([base.lam_matrix(left[q, s]) for s in range(r)]).transpose(1, 0, 2).reshape(E.dim, -1)
        pi[q] = Y @ Xp
        fit = max(fit, _maxabs(pi[q] @ X - Y))
    if fit > tol * scale:
        raise SeedInconsistent(f"no representation pi with pi(x) Lambda(a) = Lambda(x a) (residual {fit:.3e})")
    return KsgnsTriplet(A, E, Q, Lambda, pi)


def multiplication_kernel(A: AlgebraSpec, n_basis: np.ndarray) -> np.ndarray:
    """Coefficient arrays ``c[u, s]`` with ``sum_us c[u, s] n_u* n_s = 0``."""
    r = n_basis.shape[1]
    if r == 0:
        return np.zeros((0, 0, 0), dtype=complex)
    dens = A.vec_to_dense(n_basis.T)
    prods = A.dense_to_vec(np.einsum("uba,sbc->usac", dens.conj(), dens)).reshape(r * r, A.dim).T
    _, s, vh = np.linalg.svd(prods, full_matrices=True)
    rank = int((s > 1e-10 * max(s[0], 1.0)).sum()) if s.size else 0
    return vh[rank:].conj().reshape(-1, r, r)


@dataclass(frozen=True, eq=False)
class ConstructedWeight:
    weight: Weight
    triplet: KsgnsTriplet
    report: Report


def construct_weight(seed: SeedData, tol: float = DEFAULT_TOL) -> ConstructedWeight:
    """The weight ``phi(sum b_j* a_j) = sum Lambda(b_j)* Lambda(a_j)`` of a seed.

    Well-definedness is certified on the kernel of the multiplication map:
    if ``sum c_us n_u* n_s = 0`` then ``sum c_us Lambda(n_u)* T_i Lambda(n_s) = 0``
    for every operator of the family.  Raises :class:`IllDefined` otherwise.
    """
    t = close_lambda(seed, tol)
    A, E = t.source, t.E
    B = E.base
    rep = Report()
    scale = 1.0 + t.weight_norm()
    kern = multiplication_kernel(A, t.n_basis)
    x = t.lam_one_table()
    cert = 0.0
    for T, _ in seed.family:
        vals = np.einsum("si,uj,ijpq->uspq", x @ T.mat.T, x.conj(), E.gram)
        if len(kern):
            cert = max(cert, _maxabs(np.einsum("kus,uspq->kpq", kern, vals)))
    if cert > tol * scale:
        raise IllDefined(f"weight is not well defined (kernel residual {cert:.3e})")
    rep.bound("kernel-certificate", cert, tol * scale, witness={"kernel_dim": int(len(kern))})
    q = t.support
    coeffs = rho_from_T(t, ModuleMap(E, E, np.eye(E.dim))).coeffs
    phi = Weight(A, B, q, coeffs)
    # pi(x) is bounded by |x|
    bound = max([op_norm(t.pi_of(b)) - b.norm() for b in A.basis()], default=0.0)
    rep.bound("pi/contractive", max(0.0, bound), tol * scale)
    canon = build_canonical_ksgns(phi, tol)
    rep.extend(verify_ksgns(phi, t, tol), "triplet/")
    s1 = _gram_spectrum(t)
    s2 = _gram_spectrum(canon)
    rep.bound("gram-spectra", _maxabs(s1 - s2) if s1.shape == s2.shape else np.inf, tol * scale)
    return ConstructedWeight(phi, t, rep)


def _gram_spectrum(t: KsgnsTriplet) -> np.ndarray:
    X = t.spanning_matrix()
    if X.size == 0:
        return np.zeros(t.rank * t.target.dim)
    return np.linalg.eigvalsh(X.conj().T @ t.E.scalar_gram @ X)


# ------------------------------------------------------------ truncating nets

@dataclass(frozen=True)
class TruncatingNet:
    """Elements ``u_i`` of ``A``, the last one equal to the unit."""

    units: tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))

    def __len__(self):
        return len(self.units)

    def __iter__(self):
        return iter(self.units)


@dataclass(frozen=True, eq=False)
class NetIndex:
    u: Element
    S: ModuleMap
    T: ModuleMap
    rho: CpMap
    v: ModuleMap
    w: ModuleMap


def _solve_on_span(t: KsgnsTriplet, Y: np.ndarray) -> tuple[np.ndarray, float]:
    X = t.spanning_matrix()
    S = Y @ np.linalg.pinv(X, rcond=1e-12)
    return S, _maxabs(S @ X - Y)


def _solve_w(t: KsgnsTriplet, S: np.ndarray) -> tuple[np.ndarray, float]:
    """``y = w(1)`` with ``pi(n_s) y = S Lambda(n_s)(1)``."""
    E = t.E
    lhs = t.pi_table_on_domain().reshape(-1, E.dim)
    rhs = (t.lam_one_table() @ S.T).reshape(-1)
    y, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return y, _maxabs(lhs @ y - rhs)


def verify_truncating_net(phi: Weight, t: KsgnsTriplet, net: TruncatingNet,
                          tol: float = DEFAULT_TOL) -> tuple[Report, list[NetIndex]]:
    """Check the truncating-net conditions and return the per-index data."""
    if not phi.densely_defined:
        raise NotDenselyDefined("truncating nets need a densely defined weight")
    A, E = t.source, t.E
    rep = Report()
    scale = 1.0 + phi.norm()
    thr = tol * scale
    data = []
    worst = {k: 0.0 for k in ("unit-norm", "S/fit", "S/contraction", "S/commutant", "rho/cp",
                              "rho/formula", "w/fit", "v/fit", "norms", "v-w-gram", "lambda-u")}
    dens = A.vec_to_dense(t.n_basis.T)
    from .hmodule import map_from_vector
    for u in net:
        worst["unit-norm"] = max(worst["unit-norm"], u.norm() - 1.0)
        nu = A.dense_to_vec(dens @ u.mat)
        Y = np.stack([t.lam_matrix(c) for c in nu]).transpose(1, 0, 2).reshape(E.dim, -1) if t.rank else \
            np.zeros((E.dim, 0))
        S, fit = _solve_on_span(t, Y) if E.dim else (np.zeros((0, 0)), 0.0)
        worst["S/fit"] = max(worst["S/fit"], fit)
        Smap = ModuleMap(E, E, S)
        worst["S/contraction"] = max(worst["S/contraction"], op_norm(Smap) - 1.0)
        worst["S/commutant"] = max(worst["S/commutant"], commutator_defect(t, Smap) if E.dim else 0.0)
        T = Smap.adjoint() @ Smap
        rho = rho_from_T(t, T)
        worst["rho/cp"] = max(worst["rho/cp"], 0.0 if is_completely_positive(rho, tol) else 1.0)
        direct = CpMap.from_function(A, phi.target, lambda x: phi(u.H @ x @ u))
        worst["rho/formula"] = max(worst["rho/formula"], _maxabs(direct.coeffs - rho.coeffs))
        y, wfit = _solve_w(t, S) if E.dim else (np.zeros(0), 0.0)
        worst["w/fit"] = max(worst["w/fit"], wfit)
        w = map_from_vector(E, y)
        v, vfit = extract_v(t, T, tol)
        worst["v/fit"] = max(worst["v/fit"], vfit)
        nr = rho.norm()
        worst["norms"] = max(worst["norms"], abs(op_norm(v) ** 2 - nr), abs(op_norm(w) ** 2 - nr))
        worst["v-w-gram"] = max(worst["v-w-gram"], _maxabs((v.adjoint() @ v).mat - (w.adjoint() @ w).mat))
        for b in A.basis():
            lhs = t.lam_matrix((b @ u).vec())
            rhs = t.pi_of(b).mat @ w.mat
            worst["lambda-u"] = max(worst["lambda-u"], _maxabs(lhs - rhs))
        data.append(NetIndex(u, Smap, T, rho, v, w))
    for key, val in worst.items():
        rep.bound(f"net/{key}", max(0.0, val), thr * (10 if key in ("norms", "v/fit") else 1))
    if data:
        last = data[-1]
        rep.bound("net/last-is-unit", _maxabs(last.u.mat - np.eye(A.size)), 1e-10 * scale)
        rep.bound("net/last-S-identity", _maxabs(last.S.mat - np.eye(E.dim)), 1e-10 * scale)
    return rep, data


def partial_unit_truncating_net(spec: AlgebraSpec) -> TruncatingNet:
    from .algebra import PartialUnitNet
    return TruncatingNet(tuple(PartialUnitNet(spec)))


# ---------------------------------------------------------- quotient module

@dataclass(frozen=True, eq=False)
class QuotientModule:
    """The completion of ``N (.) D`` under ``d2* phi(a2* a1) d1``.

    ``U`` maps the span of the vectors ``Lambda(a) d`` in ``E`` onto it via
    ``U(Lambda(a) d) = a (x) d``.  It is stored in scalar-orthonormal
    coordinates of ``E`` (``E_half @ x``) so that isometry means
    ``U^H U = 1`` on that span.  ``theta`` is left multiplication by ``A``.
    """

    module: ModuleRep
    U: np.ndarray
    theta: np.ndarray
    d_basis: np.ndarray
    report: Report
    coords: np.ndarray = field(repr=False, default=None)

    def R_of(self, rho: CpMap, t: KsgnsTriplet) -> np.ndarray:
        """``R`` with ``<R (a1 (x) d1), a2 (x) d2> = d2* rho(a2* a1) d1`` (scalarized)."""
        G = _d_gram(rho.apply_dense(_domain_products(t)), self.d_basis)
        Zp = np.linalg.pinv(self.coords, rcond=1e-12)
        return Zp.conj().T @ G @ Zp


def _domain_products(t: KsgnsTriplet) -> np.ndarray:
    dens = t.source.vec_to_dense(t.n_basis.T)
    return np.einsum("uba,sbc->usac", dens.conj(), dens)


def _d_gram(Phi: np.ndarray, dbasis: np.ndarray) -> np.ndarray:
    r, k = Phi.shape[0], dbasis.shape[0]
    return np.einsum("vba,usbc,tca->uvst", dbasis.conj(), Phi, dbasis, optimize=True).reshape(r * k, r * k)


def right_ideal_basis(q: Element) -> np.ndarray:
    """Dense matrices forming a trace-orthonormal basis of ``q B``."""
    B = q.spec
    vecs = orthonormal_span(B.dense_to_vec(q.mat @ B.basis_dense).T)
    return B.vec_to_dense(vecs.T)


def build_quotient_module(phi: Weight, t: KsgnsTriplet, q: Element | None = None,
                          samples: Sequence = (), tol: float = DEFAULT_TOL) -> QuotientModule:
    """Build ``N (.) D`` for the right ideal ``D = q B`` and the isometry ``U``.

    ``samples`` are dominated maps whose operators ``R`` are built on the
    quotient and compared with their ``T`` through ``U``.  Raises
    :class:`NotSurjective` when the classes ``a (x) d`` do not fill the quotient.
    """
    if not phi.densely_defined:
        raise NotDenselyDefined("the quotient module needs a densely defined weight")
    A, B, E = phi.source, phi.target, t.E
    q = q if q is not None else B.unit()
    dbasis = right_ideal_basis(q)
    k = len(dbasis)
    Qm, Y, W = tensor_quotient(B, weight_gram(phi, t.n_basis), dbasis)
    dQ = Qm.dim
    # coordinates of n_s (x) d_t in the quotient basis are tr(W[s, n] d_t)
    Z = np.einsum("snab,tba->nst", W, dbasis).reshape(dQ, t.rank * k)
    half, inv_half, _ = E._gram_factors
    X = half @ np.einsum("sit,kt->isk", t.Lambda, B.dense_to_vec(dbasis)).reshape(E.dim, t.rank * k)
    rep = Report()
    thr = tol * (1.0 + phi.norm())
    rankZ = np.linalg.matrix_rank(Z, tol=1e-10 * max(1.0, spectral_norm(Z))) if Z.size else 0
    if rankZ < dQ:
        raise NotSurjective(f"classes a (x) d span {rankZ} of {dQ} dimensions")
    P = orthonormal_span(X) if X.size else np.zeros((E.dim, 0))
    U = Z @ np.linalg.pinv(X, rcond=1e-12) if X.size else np.zeros((dQ, E.dim))
    UP = U @ P
    rep.bound("U/fit", _maxabs(U @ X - Z), thr)
    rep.bound("U/isometry", _maxabs(X.conj().T @ X - Z.conj().T @ Z), thr)
    rep.bound("U/rank", abs(P.shape[1] - dQ), 0.5, witness={"source_rank": int(P.shape[1]), "target_dim": dQ})
    rep.bound("U/unitary", _maxabs(UP.conj().T @ UP - np.eye(P.shape[1])) + _maxabs(UP @ UP.conj().T - np.eye(dQ))
              if dQ == P.shape[1] else np.inf, thr)
    ortho = lambda m: np.einsum("ij,...jk,kl->...il", half, m, inv_half)
    act = ortho(E.action)
    rep.bound("U/b-linearity", _maxabs(np.einsum("ij,qjk->qik", U, act @ P) - np.einsum("qij,jk->qik", Qm.action, UP)),
              thr)
    theta = quotient_representation(A, t.n_basis, Y, W) if dQ else np.zeros((A.dim, 0, 0))
    rep.bound("theta/intertwines-pi",
              _maxabs(np.einsum("ij,qjk->qik", U, ortho(t.pi) @ P) - np.einsum("qij,jk->qik", theta, UP)), thr)
    out = QuotientModule(Qm, U, theta, dbasis, rep, Z)
    for n, d in enumerate(samples):
        R = out.R_of(d.rho, t)
        ev = np.linalg.eigvalsh((R + R.conj().T) / 2) if dQ else np.zeros(1)
        rep.bound(f"R[{n}]/positive", max(0.0, -ev[0]), thr)
        rep.bound(f"R[{n}]/contraction", max(0.0, ev[-1] - 1.0), thr)
        rep.bound(f"R[{n}]/b-linearity", ModuleMap(Qm, Qm, R).b_linearity_defect(), thr)
        rep.bound(f"R[{n}]/transport", _maxabs(UP.conj().T @ R @ UP - P.conj().T @ ortho(d.T.mat) @ P), thr * 10)
    return out


# ------------------------------------------------------- core approximation

@dataclass(frozen=True, eq=False)
class CoreApproximation:
    elements: tuple[Element, ...]
    indices: tuple[int, ...]
    errors: tuple[float, ...]
    lambda_errors: tuple[float, ...]
    report: Report


def core_approximation(phi: Weight, t: KsgnsTriplet, net_data: Sequence[NetIndex], core: Sequence[Element],
                       a: Element, mode: str = "exact", eps: float = 1e-6, bound: float | None = None,
                       tol: float = DEFAULT_TOL) -> CoreApproximation:
    """A sequence ``a_j`` in ``span(core) u_i`` converging to ``a`` with ``Lambda(a_j) -> Lambda(a)``.

    In ``exact`` mode ``|a_j| <= |a|`` and ``|Lambda(a_j)| <= |Lambda(a)|``; this
    needs ``Lambda(a) != 0`` and raises :class:`ZeroLambdaExactMode` otherwise.
    In ``slack`` mode the second bound is relaxed to ``< bound``.
    """
    if mode not in ("exact", "slack"):
        raise ValueError("mode must be 'exact' or 'slack'")
    A, E = t.source, t.E
    lam_a = t.lam_one(a.vec())
    lam_norm = E.vector_norm(lam_a)
    zero_lambda = lam_norm <= 1e-14 * max(1.0, a.norm())
    if zero_lambda and mode == "exact":
        raise ZeroLambdaExactMode("Lambda(a) = 0; use slack mode")
    if mode == "slack":
        if bound is None or bound <= lam_norm:
            raise ValueError("slack mode needs a bound above |Lambda(a)|")
    K = np.stack([k.vec() for k in core], axis=1)
    coef, *_ = np.linalg.lstsq(K, a.vec(), rcond=None)
    proj = A.from_vec(K @ coef)
    # no perturbation needed when a already lies in span(core)
    in_core = (proj - a).norm() <= 1e-14 * max(1.0, a.norm())
    z = core[0] * (0.0 if in_core else 1.0 / core[0].norm())
    unit_b = phi.target.unit().vec()
    w1 = [nd.w.mat @ unit_b for nd in net_data]
    pa = t.pi_of(a).mat
    i0 = next((i for i, w in enumerate(w1) if E.vector_norm(pa @ w) > 1e-14), len(w1) - 1)
    levels = int(min(40, np.ceil(np.log2(1.0 / eps)) + 1))
    elems, idx, errs, lerrs = [], [], [], []
    norm_a = a.norm()
    ok_norm = ok_lam = True
    for level in range(levels + len(net_data)):
        i = min(i0 + level, len(net_data) - 1)
        m = 2.0 ** min(level, levels)
        wn = op_norm(net_data[i].w)
        c = proj + z * (1.0 / (m * (wn + 1.0)))
        pcw = E.vector_norm(t.pi_of(c).mat @ w1[i])
        paw = E.vector_norm(pa @ w1[i])
        lam = norm_a / c.norm() if c.norm() > 0 else 1.0
        if not zero_lambda:
            mu = paw / pcw if pcw > 0 else 1.0
            scale = min(lam, mu)
        else:
            if pcw >= bound:
                continue
            scale = min(lam, 1.0)
        d = c * scale
        aj = d @ net_data[i].u
        elems.append(aj)
        idx.append(i)
        errs.append((aj - a).norm())
        lerrs.append(E.vector_norm(t.lam_one(aj.vec()) - lam_a))
        ok_norm &= aj.norm() <= norm_a * (1 + tol) + tol
        lam_j = E.vector_norm(t.lam_one(aj.vec()))
        if mode == "exact" or not zero_lambda:
            ok_lam &= lam_j <= lam_norm * (1 + tol) + tol
        else:
            ok_lam &= lam_j < bound
    rep = Report()
    rep.flag("bound/norm", ok_norm)
    rep.flag("bound/lambda", ok_lam)
    rep.bound("limit/element", errs[-1] if errs else np.inf, eps)
    rep.bound("limit/lambda", lerrs[-1] if lerrs else np.inf, eps * max(1.0, lam_norm))
    return CoreApproximation(tuple(elems), tuple(idx), tuple(errs), tuple(lerrs), rep)


def rho_family_convergence(phi: Weight, t: KsgnsTriplet, net_data: Sequence[NetIndex],
                           sampler: CpFamilySampler | None = None, rng: np.random.Generator | None = None,
                           samples: int = 10, tol: float = DEFAULT_TOL) -> Report:
    """``rho_i(a) -> phi(a)`` along the net, below ``phi`` throughout.

    Positive elements are taken from a spanning set; compressions ``b* . b``
    use random ``b``.  With a sampler, maps below ``phi`` are checked to stay
    under the supremum of the net values.
    """
    rng = rng or np.random.default_rng(0)
    A, B = phi.source, phi.target
    rep = Report()
    scale = 1.0 + phi.norm()
    pos = positive_spanning_set(A)
    bs = [B.random_element(rng) for _ in range(3)]
    below = np.inf
    final = 0.0
    for x in pos:
        target = phi(x)
        for nd in net_data:
            val = nd.rho(x)
            below = min(below, min_eig((target - val).mat))
            for b in bs:
                below = min(below, min_eig((b.H @ (target - val) @ b).mat) / max(1.0, b.norm() ** 2))
        final = max(final, (net_data[-1].rho(x) - target).norm())
    rep.bound("below-weight", max(0.0, -below), tol * scale)
    rep.bound("final-index", final, 1e-10 * scale)
    # positive x lies in the domain exactly when rho_i(x) converges; only testable on samples
    inside = [t.domain_defect(x) <= 1e-10 * max(1.0, x.norm()) for x in pos]
    converges = final <= 1e-10 * scale
    rep.flag("domain/set-equality", all(inside) == converges,
             witness={"status": "verified at budget", "elements": len(pos)})
    if sampler is not None:
        worst = np.inf
        for _ in range(samples):
            d = sampler.sample()
            for x in pos:
                for b in bs:
                    worst = min(worst, min_eig((b.H @ (phi(x) - d.rho(x)) @ b).mat) / max(1.0, b.norm() ** 2))
        rep.bound("transfer", max(0.0, -worst), tol * scale)
    return rep


@dataclass(frozen=True, eq=False)
class RegularWeight:
    """A densely defined weight together with a certified truncating net."""

    weight: Weight
    triplet: KsgnsTriplet
    net: TruncatingNet
    data: tuple[NetIndex, ...]
    report: Report


def certify_regular(phi: Weight, net: TruncatingNet | None = None, t: KsgnsTriplet | None = None,
                    tol: float = DEFAULT_TOL) -> RegularWeight:
    """Canonical triplet plus truncating-net certificate (partial units by default)."""
    t = t if t is not None else build_canonical_ksgns(phi, tol)
    net = net if net is not None else partial_unit_truncating_net(phi.source)
    rep, data = verify_truncating_net(phi, t, net, tol)
    return RegularWeight(phi, t, net, tuple(data), rep)
