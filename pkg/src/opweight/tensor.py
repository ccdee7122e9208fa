"""Tensor products of regular weights.

The product is assembled from seed data: the domain is spanned by products
``n1 (x) n2``, ``Lambda0`` is ``Lambda1 (x) Lambda2`` and the operator
family runs over the product grid of the factor nets, ending at ``1 (x) 1``.
The generic seed machinery then produces the product weight and its triplet.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .algebra import DEFAULT_TOL, Element, element_tensor, min_eig, positive_spanning_set, tensor_layout
from .cpmap import CpFamilySampler, DominatedMap, solve_T
from .errors import NotInH
from .hmodule import free_tensor_permutation, op_norm, tensor_map, tensor_module
from .regular import (RegularWeight, SeedData, TruncatingNet, construct_weight,
                      verify_truncating_net)
from .report import Report


def _maxabs(a) -> float:
    return float(np.abs(a).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class TensorWeight:
    factors: tuple[RegularWeight, RegularWeight]
    regular: RegularWeight
    seed: SeedData
    report: Report

    @property
    def weight(self):
        return self.regular.weight

    @property
    def triplet(self):
        return self.regular.triplet


def product_seed(f1: RegularWeight, f2: RegularWeight) -> SeedData:
    t1, t2 = f1.triplet, f2.triplet
    A1, A2 = t1.source, t2.source
    p1, p2 = tensor_layout(A1, A2).vec_pairs
    A = A1.tensor(A2)
    E = tensor_module(t1.E, t2.E)
    N0 = (t1.n_basis[p1][:, :, None] * t2.n_basis[p2][:, None, :]).reshape(A.dim, -1)
    perm = free_tensor_permutation(t1.target, t2.target)
    Lambda0 = np.stack([np.kron(l1, l2)[:, perm] for l1 in t1.Lambda for l2 in t2.Lambda]) \
        if t1.rank * t2.rank else np.zeros((0, E.dim, E.base.dim))
    family = [(tensor_map(a.T, b.T, E, E), a.rho.tensor(b.rho)) for a, b in product(f1.data, f2.data)]
    return SeedData(A, E, N0, Lambda0, tuple(family))


def tensor_weight(f1: RegularWeight, f2: RegularWeight, tol: float = DEFAULT_TOL) -> TensorWeight:
    """Product of two regular weights, certified as a regular weight.

    The product net is ``u_i (x) u_j`` over the grid of factor indices.
    """
    seed = product_seed(f1, f2)
    built = construct_weight(seed, tol)
    net = TruncatingNet(tuple(element_tensor(a, b) for a, b in product(f1.net, f2.net)))
    net_rep, data = verify_truncating_net(built.weight, built.triplet, net, tol)
    rep = Report()
    rep.extend(built.report, "construct/")
    rep.extend(net_rep, "product-net/")
    d1, d2, d = f1.triplet.E.dim, f2.triplet.E.dim, built.triplet.E.dim
    rep.bound("dimension-law", abs(d - d1 * d2), 0.5, witness={"dim": d, "factors": [d1, d2]})
    reg = RegularWeight(built.weight, built.triplet, net, tuple(data), net_rep)
    return TensorWeight((f1, f2), reg, seed, rep)


def check_factorization(tw: TensorWeight, tol: float = DEFAULT_TOL) -> Report:
    """``phi(a1 (x) a2) = phi1(a1) (x) phi2(a2)`` and the same for ``Lambda``."""
    (f1, f2), phi = tw.factors, tw.weight
    phi1, phi2 = f1.weight, f2.weight
    t, t1, t2 = tw.triplet, f1.triplet, f2.triplet
    lay_a = tensor_layout(phi1.source, phi2.source)
    lay_b = tensor_layout(phi1.target, phi2.target)
    rep = Report()
    scale = 1.0 + phi.norm()
    # full sweep over matrix units through the coefficient tables
    pa1, pa2 = lay_a.vec_pairs
    pb1, pb2 = lay_b.vec_pairs
    kron = phi1.coeffs[pb1][:, pa1] * phi2.coeffs[pb2][:, pa2]
    rep.bound("weight/factorization", _maxabs(phi.coeffs - kron), tol * scale)
    worst = 0.0
    unit1, unit2 = t1.target.unit().vec(), t2.target.unit().vec()
    for s, u in product(range(t1.rank), range(t2.rank)):
        a = t1.n_basis[pa1, s] * t2.n_basis[pa2, u]
        lhs = t.lam_one(a)
        rhs = np.kron(t1.Lambda[s] @ unit1, t2.Lambda[u] @ unit2)
        worst = max(worst, _maxabs(lhs - rhs))
    rep.bound("lambda/factorization", worst, tol * scale)
    return rep


def check_T_transport(tw: TensorWeight, w1: DominatedMap, w2: DominatedMap, tol: float = 1e-8) -> Report:
    """``T`` of ``w1 (x) w2`` is ``T1 (x) T2``."""
    t = tw.triplet
    rep = Report()
    rho = w1.rho.tensor(w2.rho)
    expected = tensor_map(w1.T, w2.T, t.E, t.E)
    try:
        d = solve_T(rho, t, tol)
    except NotInH as exc:
        rep.flag("T/solve", False, witness={"error": str(exc)})
        return rep
    rep.bound("T/transport", _maxabs(d.T.mat - expected.mat), tol)
    n1, n2 = op_norm(w1.T), op_norm(w2.T)
    if n1 < 1 and n2 < 1:
        rep.bound("T/strictly-below", max(0.0, op_norm(d.T) - n1 * n2), tol,
                  witness={"norm": op_norm(d.T)})
    else:
        rep.skip("T/strictly-below", "a factor is not strictly below its weight")
    return rep


def check_product_convergence(tw: TensorWeight, c: Element, d: Element,
                              samplers: Sequence[CpFamilySampler], samples: int = 50,
                              tol: float = DEFAULT_TOL, gap_tol: float = 1e-7) -> Report:
    """Product-grid maps below ``phi`` at ``c`` and attainment as both scales tend to 1."""
    phi = tw.weight
    rep = Report()
    top = (d.H @ phi(c) @ d)
    scale = 1.0 + top.norm()
    s1, s2 = samplers
    worst = np.inf
    for _ in range(samples):
        w = s1.sample().rho.tensor(s2.sample().rho)
        worst = min(worst, min_eig((top - d.H @ w(c) @ d).mat))
    rep.bound("domination", max(0.0, -worst), tol * scale, witness={"min_slack": float(worst)})
    gaps = []
    for k in range(1, 10):
        lam = 1.0 - 10.0 ** (-k)
        gaps.append(((lam * lam) * top - top).norm())
    rep.bound("attainment", gaps[-1], gap_tol * scale)
    rep.flag("attainment/monotone", all(b <= a for a, b in zip(gaps, gaps[1:])))
    # along the product net the values increase to the product weight
    net_vals = [(d.H @ nd.rho(c) @ d) for nd in tw.regular.data]
    rep.bound("net/final", (net_vals[-1] - top).norm(), 1e-10 * scale)
    rep.bound("net/below", max(0.0, -min(min_eig((top - v).mat) for v in net_vals)), tol * scale)
    return rep


def random_positive(spec, rng) -> Element:
    x = spec.random_element(rng)
    return x.H @ x


def positive_pairs(tw: TensorWeight) -> list[Element]:
    """Products of positive spanning elements of the factors."""
    (f1, f2) = tw.factors
    return [element_tensor(a, b) for a in positive_spanning_set(f1.weight.source)
            for b in positive_spanning_set(f2.weight.source)]
