"""Scalar GNS constructions and convergence criteria for module operators.

Besides the GNS space of a positive functional this module provides:

* recovery of the operator ``T`` behind a form ``s(b1, b2)`` dominated by a
  functional ``theta``, giving ``omega(x) = <T pi(x) v, v>`` below ``theta``;
* the comparison of strong and weak convergence for nets ``T_i <= T``;
* limits of increasing nets of positive operators;
* the inequality ``|T v|^2 <= |T| |<T v, v>|`` for positive ``T``, which every
  routine here reports to a shared :data:`MONITOR`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import DEFAULT_TOL, AlgebraSpec, Element, min_eig, spectral_norm
from .errors import DominationViolated, NotMonotone, NotPositiveFunctional
from .hmodule import ModuleMap, left_mult, op_norm, positive_part_check, spectrum
from .report import Report

INEQUALITY_TOL = 1e-12


class InequalityMonitor:
    """Records the worst violation of ``|T v|^2 <= |T| |<T v, v>|`` seen so far."""

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        with self._lock:
            self.worst = -np.inf
            self.count = 0

    def observe(self, T: ModuleMap, v: np.ndarray) -> float:
        lhs, rhs = square_norm_bound(T, v)
        slack = lhs - rhs
        with self._lock:
            self.count += 1
            self.worst = max(self.worst, slack / max(1.0, rhs))
        if slack > INEQUALITY_TOL * max(1.0, rhs):
            raise AssertionError(f"|Tv|^2 = {lhs:.16e} exceeds |T| |<Tv,v>| = {rhs:.16e}")
        return slack


MONITOR = InequalityMonitor()


def square_norm_bound(T: ModuleMap, v: np.ndarray) -> tuple[float, float]:
    """``(|T v|^2, |T| |<T v, v>|)`` for a positive operator ``T``."""
    E = T.source
    tv = T.mat @ v
    lhs = spectral_norm(E.inner_dense(tv, tv))
    rhs = op_norm(T) * spectral_norm(E.inner_dense(tv, v))
    return lhs, rhs


def algebra_inequality(c: Element, b: Element) -> float:
    """The same inequality inside ``B``: ``|c b|^2 <= |c| |b* c b|`` for ``c >= 0``."""
    return MONITOR.observe(left_mult(c), b.vec())


# ------------------------------------------------------------------ GNS

def functional_density(spec: AlgebraSpec, theta: np.ndarray) -> np.ndarray:
    """Dense ``D`` with ``theta(x) = tr(D x)``; ``theta`` given on matrix units."""
    return spec.vec_to_dense(np.asarray(theta, dtype=complex)).T


def is_positive_functional(spec: AlgebraSpec, theta: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    d = functional_density(spec, theta)
    scale = max(spectral_norm(d), 1e-300)
    return bool(np.abs(d - d.conj().T).max() <= tol * scale and min_eig(d) >= -tol * scale)


@dataclass(frozen=True, eq=False)
class GnsData:
    """``(H, pi, v)`` on an orthonormal basis of ``A / {x : theta(x* x) = 0}``."""

    spec: AlgebraSpec
    theta: np.ndarray
    coords: np.ndarray  # C: columns are the basis vectors in matrix-unit coordinates
    pi: np.ndarray
    v: np.ndarray

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def vector_of(self, a: Element | np.ndarray) -> np.ndarray:
        """Coordinates of the class of ``a``."""
        av = a.vec() if isinstance(a, Element) else np.asarray(a)
        basis = self.spec.basis_dense
        ad = self.spec.vec_to_dense(av)
        # <a, h_n> = sum_j conj(C[j, n]) theta(beta_j* a)
        vals = self.spec.dense_to_vec(np.einsum("jba,bc->jac", basis.conj(), ad)) @ self.theta
        return self.coords.conj().T @ vals

    def pi_of(self, x: Element) -> np.ndarray:
        return np.tensordot(x.vec(), self.pi, axes=(0, 0))


def gns(spec: AlgebraSpec, theta: np.ndarray, tol: float = DEFAULT_TOL) -> GnsData:
    """GNS construction of a positive functional given on matrix units."""
    theta = np.asarray(theta, dtype=complex)
    if not is_positive_functional(spec, theta, tol):
        raise NotPositiveFunctional("functional is not positive")
    basis = spec.basis_dense
    prods = np.einsum("iba,bc,jcd->ijad", basis.conj(), np.eye(spec.size), basis)
    M = spec.dense_to_vec(prods) @ theta  # M[i, j] = theta(e_i* e_j) = <e_j, e_i>
    M = (M + M.conj().T) / 2
    vals, vecs = np.linalg.eigh(M)
    top = vals[-1] if vals.size else 0.0
    keep = vals > 1e-10 * top if top > 1e-300 else np.zeros(len(vals), bool)
    C = vecs[:, keep] / np.sqrt(vals[keep])
    # K_x[j, i] = theta(e_j* x e_i) for each matrix unit x
    trip = np.einsum("jba,qbc,icd->qjiad", basis.conj(), basis, basis)
    K = spec.dense_to_vec(trip) @ theta  # (q, j, i)
    pi = np.einsum("jn,qji,im->qnm", C.conj(), K, C)
    one = spec.dense_to_vec(np.einsum("jba->jab", basis.conj())) @ theta  # theta(e_j*)
    v = C.conj().T @ one
    return GnsData(spec, theta, C, pi, v)


@dataclass(frozen=True, eq=False)
class SesquilinearForm:
    """``s(b_i, b_j) = values[i, j]`` on a basis ``b_i`` (vec columns) of a left ideal.

    Linear in the first variable.
    """

    spec: AlgebraSpec
    ideal_basis: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class OmegaResult:
    T: np.ndarray
    omega: np.ndarray
    gns: GnsData
    report: Report


def theta_form(data: GnsData, ideal_basis: np.ndarray) -> np.ndarray:
    """``theta(b_j* b_i)`` indexed ``[i, j]``."""
    X = np.stack([data.vector_of(b) for b in ideal_basis.T], axis=1)
    return (X.conj().T @ X).T


def reconstruct_omega(theta: np.ndarray, form: SesquilinearForm, tol: float = DEFAULT_TOL) -> OmegaResult:
    """Operator ``T`` on the GNS space of ``theta`` with ``<T pi(b1) v, pi(b2) v> = s(b1, b2)``.

    Raises :class:`DominationViolated` if ``s(b, b) <= theta(b* b)`` fails.
    """
    spec = form.spec
    data = gns(spec, theta, tol)
    s = np.asarray(form.values, dtype=complex)
    X = np.stack([data.vector_of(b) for b in form.ideal_basis.T], axis=1)
    th = (X.conj().T @ X).T
    scale = max(1.0, spectral_norm(th))
    gap = min_eig(th - s) if s.size else 0.0
    if gap < -tol * scale:
        raise DominationViolated(f"form exceeds the functional (eigenvalue {gap:.3e})")
    rep = Report()
    rep.bound("form/hermitian", float(np.abs(s - s.conj().T).max(initial=0.0)), tol * scale)
    rep.bound("form/positive", max(0.0, -min_eig(s)) if s.size else 0.0, tol * scale)
    Xp = np.linalg.pinv(X, rcond=1e-12) if X.size else X.conj().T
    T = Xp.conj().T @ s.T @ Xp
    T = (T + T.conj().T) / 2
    rep.bound("fit", float(np.abs(X.conj().T @ T @ X - s.T).max(initial=0.0)), tol * scale)
    ev = np.linalg.eigvalsh(T) if T.size else np.zeros(1)
    rep.bound("T/positive", max(0.0, -ev[0]), tol * scale)
    rep.bound("T/contraction", max(0.0, ev[-1] - 1.0), tol * scale)
    comm = np.einsum("ij,qjk->qik", T, data.pi) - np.einsum("qij,jk->qik", data.pi, T)
    rep.bound("T/commutant", float(np.abs(comm).max(initial=0.0)), tol * scale)
    # omega(x) = <T pi(x) v, v> = v^H T pi(x) v
    omega = np.einsum("i,ij,qjk,k->q", data.v.conj(), T, data.pi, data.v) if data.dim else np.zeros(spec.dim, complex)
    diff = functional_density(spec, data.theta - omega)
    rep.bound("omega/below-theta", max(0.0, -min_eig(diff)), tol * scale,
              witness={"min_slack": float(min_eig(diff))})
    om_form = (X.conj().T @ T @ X).T
    rep.bound("omega/form", float(np.abs(om_form - s).max(initial=0.0)), tol * scale)
    return OmegaResult(T, omega, data, rep)


# -------------------------------------------------------- convergence

@dataclass(frozen=True)
class ConvergenceReport:
    strong: list[float]
    weak: list[float]
    bound_ok: bool
    weak_monotone: bool
    converged: bool

    @property
    def equivalent(self) -> bool:
        return self.bound_ok and self.weak_monotone and self.converged


def strong_convergence_equiv(nets: Sequence[ModuleMap], T: ModuleMap, probes: Sequence[np.ndarray],
                             tol: float = DEFAULT_TOL) -> ConvergenceReport:
    """Compare ``|T v - T_i v|`` with ``|<T v, v> - <T_i v, v>|`` along a net ``0 <= T_i <= T``.

    The strong residual is bounded by ``2 |T|`` times the weak one at every
    index, the weak residual decreases when the net increases, and both must
    end below ``tol``.
    """
    E = T.source
    norm_t = op_norm(T)
    strong, weak = [], []
    bound_ok = True
    for Ti in nets:
        gap = T - Ti
        if not positive_part_check(gap, tol):
            raise DominationViolated("net element is not below the limit")
        s_i = w_i = 0.0
        for v in probes:
            MONITOR.observe(gap, v)
            dv = gap.mat @ v
            sv = spectral_norm(E.inner_dense(dv, dv))
            wv = spectral_norm(E.inner_dense(dv, v))
            if sv > 2.0 * norm_t * wv + INEQUALITY_TOL * max(1.0, norm_t):
                bound_ok = False
            s_i, w_i = max(s_i, sv), max(w_i, wv)
        strong.append(float(np.sqrt(s_i)))
        weak.append(float(w_i))
    mono = all(b <= a + tol for a, b in zip(weak, weak[1:]))
    conv = bool(strong and strong[-1] <= tol and weak[-1] <= tol)
    return ConvergenceReport(strong, weak, bound_ok, mono, conv)


@dataclass(frozen=True, eq=False)
class MonotoneLimit:
    limit: ModuleMap
    report: Report


def monotone_limit(nets: Sequence[ModuleMap], probes: Sequence[np.ndarray] = (),
                   tol: float = DEFAULT_TOL) -> MonotoneLimit:
    """Limit of an increasing net of positive operators (its last element).

    The Cauchy property is certified on ``probes`` through
    ``|T_j v - T_i v|^2 <= |T_j - T_i| |<(T_j - T_i) v, v>|``.
    """
    if not nets:
        raise ValueError("empty net")
    scale = max(1.0, op_norm(nets[-1]))
    if not positive_part_check(nets[0], tol):
        raise NotMonotone("first element is not positive")
    for i, (a, b) in enumerate(zip(nets, nets[1:])):
        if not positive_part_check(b - a, tol):
            raise NotMonotone(f"net decreases at index {i + 1} (eigenvalue {spectrum(b - a)[0]:.3e})")
    rep = Report()
    worst = 0.0
    last = nets[-1]
    for Ti in nets:
        gap = last - Ti
        for v in probes:
            worst = max(worst, MONITOR.observe(gap, v))
    rep.bound("cauchy-bound", max(0.0, worst), INEQUALITY_TOL * scale)
    rep.bound("bounded", max(0.0, max(op_norm(t) for t in nets) - op_norm(last)), tol * scale)
    return MonotoneLimit(last, rep)
