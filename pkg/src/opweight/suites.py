"""Property suites behind the acceptance criteria.

Every suite draws its instances from its own generator, derived from the run
seed and the suite name, so suites are independent of each other and of the
order in which they run.  Thresholds are quoted at the default tolerance
``1e-9`` and scale linearly with the configured one.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import AlgebraSpec, Element, commutant, min_eig, spectral_norm, squeeze_to_unit_interval
from .cpmap import (CpFamilySampler, choi_kraus, cp_witness, dilation_residual, directed_join,
                    dominated_from_T, cayley_monotone, is_completely_positive, order_leq, order_leq_via_T,
                    rho_from_T, sampled_min_eigenvalue, solve_T, transpose_map)
from .errors import OpWeightError
from .hmodule import ModuleMap, ModuleRep, left_mult, op_norm
from .instances import (identity_weight, random_kraus_map, random_non_cp_map,
                        random_ordered_pair, random_positive, random_projection, random_spec, random_weight)
from .ksgns import Weight, build_canonical_ksgns, compactness_criterion, domain_basis, verify_ksgns, weight_gram
from .regular import build_quotient_module, certify_regular, construct_weight, rho_family_convergence, seed_from_triplet
from .report import Report
from .tensor import check_factorization, check_T_transport, tensor_weight
from .verify import MONITOR, INEQUALITY_TOL, SesquilinearForm, algebra_inequality, gns, reconstruct_omega

BASE_TOL = 1e-9


@dataclass(frozen=True)
class SuiteConfig:
    tol: float = BASE_TOL
    seed: int = 0
    samples: int = 200

    def thr(self, value: float) -> float:
        """A threshold quoted at the default tolerance, rescaled to ``tol``."""
        return value * self.tol / BASE_TOL

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(name.encode())])

    def count(self, fraction: float = 1.0, minimum: int = 1) -> int:
        return max(minimum, int(round(self.samples * fraction)))


class Worst:
    """Running maxima of residuals, remembering the instance that produced them."""

    def __init__(self):
        self.values: dict[str, tuple[float, int]] = {}

    def add(self, label: str, residual: float, index: int):
        residual = float(residual)
        if label not in self.values or residual > self.values[label][0] or np.isnan(residual):
            self.values[label] = (residual, index)

    def into(self, rep: Report, thresholds: dict[str, float]) -> Report:
        for label, (res, idx) in self.values.items():
            rep.bound(label, res, thresholds[label], witness={"instance": idx})
        return rep


def _maxabs(a) -> float:
    return float(np.abs(a).max(initial=0.0))


def _probe(E, rng) -> np.ndarray:
    return rng.standard_normal(E.dim) + 1j * rng.standard_normal(E.dim)


def _observe(T: ModuleMap, rng, probes: int = 2):
    for _ in range(probes):
        MONITOR.observe(T, _probe(T.source, rng))


# ------------------------------------------------------------------ suites

def suite_reconstruction(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("reconstruction")
    worst = Worst()
    failures = []
    n = cfg.count()
    for i in range(n):
        phi = random_weight(rng, dense=i % 4 != 0)
        t = build_canonical_ksgns(phi)
        scale = 1.0 + phi.norm()
        worst.add("inner-product", _maxabs(weight_gram(phi, t.n_basis) - t.weight_values()) / scale, i)
        # |Lambda(a)|^2 = |phi(a* a)| on the domain basis and on random domain elements
        norms = 0.0
        cols = list(t.n_basis.T) + [t.n_basis @ (rng.standard_normal(t.rank) + 1j * rng.standard_normal(t.rank))]
        for c in cols:
            a = phi.source.from_vec(c)
            lam = t.E.vector_norm(t.lam_one(c)) ** 2
            norms = max(norms, abs(lam - phi(a.H @ a).norm()))
        worst.add("norm-identity", norms / scale, i)
        if i % 10 == 0:
            rep = verify_ksgns(phi, t, cfg.tol)
            if not rep.passed:
                failures.append({"instance": i, "checks": [c.label for c in rep.failures()]})
    rep = worst.into(Report(), {"inner-product": cfg.thr(1e-9), "norm-identity": cfg.thr(1e-9)})
    rep.flag("full-verification", not failures, len(failures), witness=failures or None)
    return rep


def suite_cp_oracles(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("cp-oracles")
    tol = cfg.thr(1e-8)
    disagreements = []
    n = cfg.count()
    for i in range(n):
        if i % 2:
            A = random_spec(rng)
            if max(A.block_dims) == 1:
                A = AlgebraSpec((2,))
            rho = random_non_cp_map(A, rng)
        else:
            rho = random_kraus_map(random_spec(rng), random_spec(rng), rng)
        by_gram = is_completely_positive(rho, tol)
        by_sampling = sampled_min_eigenvalue(rho, rng, 1000) >= -tol
        kraus, low = choi_kraus(rho)
        scale = max(1.0, rho.norm())
        by_dilation = low >= -tol * scale and dilation_residual(rho) <= tol * scale
        if not by_gram == by_sampling == by_dilation:
            disagreements.append({"instance": i, "gram": by_gram, "sampling": by_sampling, "dilation": by_dilation})
    rep = Report()
    rep.bound("disagreements", len(disagreements), 0, witness=disagreements or None)
    tr = transpose_map(AlgebraSpec((2,)))
    w = cp_witness(tr)
    value = min_eig(w.evaluate(tr).mat)
    rep.flag("transpose/rejected", not is_completely_positive(tr, tol))
    rep.bound("transpose/witness", value, -0.5, witness={"min_eigenvalue": w.min_eigenvalue, "witness_value": value})
    return rep


def _small_weight(rng, max_dim: int = 12, dense: bool = True):
    while True:
        phi = random_weight(rng, dense=dense)
        t = build_canonical_ksgns(phi)
        if 0 < t.E.dim <= max_dim:
            return phi, t


def suite_dominated(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("dominated")
    worst = Worst()
    errors = []
    n = cfg.count()
    for i in range(n):
        phi, t = _small_weight(rng)
        sampler = CpFamilySampler(t, 1.0, seed=int(rng.integers(2 ** 32)))
        T0 = sampler.sample_T()
        _observe(T0, rng)
        rho = rho_from_T(t, T0)
        try:
            d = solve_T(rho, t, cfg.thr(1e-8))
        except OpWeightError as exc:
            errors.append({"instance": i, "error": str(exc)})
            continue
        worst.add("T/recovery", _maxabs(d.T.mat - T0.mat), i)
        worst.add("v/norm", abs(op_norm(d.v) ** 2 - rho.norm()), i)
        res = 0.0
        for x in phi.source.basis():
            res = max(res, _maxabs((d.v.adjoint() @ t.pi_of(x) @ d.v).mat - left_mult(rho(x)).mat))
        worst.add("v/dilation", res, i)
        pis = t.pi
        worst.add("T/commutant", _maxabs(np.einsum("ij,qjk->qik", d.T.mat, pis)
                                         - np.einsum("qij,jk->qik", pis, d.T.mat)), i)
        worst.add("T/nullity", d.nullity, i)
        if i % 5 == 0:
            # additivity and scaling of rho -> T, and the two order criteria
            T1 = sampler.sample_T()
            d2 = solve_T(rho + rho_from_T(t, T1), t, cfg.thr(1e-8))
            d3 = solve_T(rho * 0.5, t, cfg.thr(1e-8))
            worst.add("T/linearity", max(_maxabs(d2.T.mat - T0.mat - T1.mat), _maxabs(d3.T.mat - 0.5 * T0.mat)), i)
            r1, r2 = dominated_from_T(t, T0 * 0.5), dominated_from_T(t, T0)
            agree = order_leq(r1.rho, r2.rho, 1e-8) == order_leq_via_T(r1, r2, 1e-8) \
                and order_leq(d.rho, rho_from_T(t, T1), 1e-8) == order_leq_via_T(d, dominated_from_T(t, T1), 1e-8)
            worst.add("order/disagreement", 0.0 if agree else 1.0, i)
    rep = worst.into(Report(), {"T/recovery": cfg.thr(1e-8), "v/norm": cfg.thr(1e-8), "v/dilation": cfg.thr(1e-8),
                                "T/commutant": cfg.thr(1e-9), "T/nullity": 0, "T/linearity": cfg.thr(1e-10),
                                "order/disagreement": 0})
    rep.bound("solve-errors", len(errors), 0, witness=errors or None)
    return rep


def suite_join(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("join")
    worst = Worst()
    n = cfg.count()
    for i in range(n):
        phi, t = _small_weight(rng)
        sampler = CpFamilySampler(t, 1.0, seed=int(rng.integers(2 ** 32)))
        d1, d2 = sampler.sample(), sampler.sample()
        lams = tuple(rng.uniform(0, 0.95, 2))
        res = directed_join(d1, d2, t, lams)
        _observe(res.dominated.T, rng)
        for key, slack in res.slacks.items():
            worst.add(f"slack/{key}", max(0.0, -slack), i)
    # scalar case: T1 = T2 = 1 and gamma = 1/2 give T = 2/3
    t = build_canonical_ksgns(identity_weight(AlgebraSpec((1,))))
    one = dominated_from_T(t, ModuleMap(t.E, t.E, np.eye(1)))
    scalar = directed_join(one, one, t, (0.0, 0.0), 0.5)
    rep = worst.into(Report(), {k: cfg.thr(1e-10) for k in worst.values})
    rep.bound("scalar/two-thirds", abs(scalar.dominated.T.mat[0, 0] - 2.0 / 3.0), 4 * np.finfo(float).eps)
    return rep


def suite_monotone(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("monotone")
    worst = Worst()
    n = cfg.count(2.5)
    for i in range(n):
        spec = AlgebraSpec((int(rng.integers(1, 4)),))
        s1, s2 = random_ordered_pair(spec.size, rng)
        T1, T2 = left_mult(Element(spec, s1)), left_mult(Element(spec, s2))
        _observe(T2, rng, 1)
        scale = max(1.0, spectral_norm(s2))
        worst.add("slack", max(0.0, -cayley_monotone(T1, T2, 1e-9)) / scale, i)
    return worst.into(Report(), {"slack": cfg.thr(1e-9)})


def suite_omega(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("omega")
    worst = Worst()
    errors = []
    n = cfg.count(0.5)
    for i in range(n):
        A = random_spec(rng)
        z = rng.standard_normal((A.size, A.size)) + 1j * rng.standard_normal((A.size, A.size))
        rank = int(rng.integers(1, A.size + 1))
        D = Element(A, z[:, :rank] @ z[:, :rank].conj().T).mat
        theta = A.dense_to_vec(D.T)
        data = gns(A, theta)
        p = random_projection(A, rng)
        ideal = domain_basis(p)
        X = np.stack([data.vector_of(b) for b in ideal.T], axis=1)
        comm = commutant(list(data.pi), data.dim)
        herm = comm + comm.conj().transpose(0, 2, 1)
        h = np.tensordot(rng.standard_normal(len(herm)), herm, axes=(0, 0))
        T0 = squeeze_to_unit_interval(h, rng.uniform(0.2, 1.0))
        s = (X.conj().T @ T0 @ X).T
        try:
            out = reconstruct_omega(theta, SesquilinearForm(A, ideal, s), cfg.tol)
        except OpWeightError as exc:
            errors.append({"instance": i, "error": str(exc)})
            continue
        r = out.report
        scale = max(1.0, spectral_norm(D))
        worst.add("omega/form", r["omega/form"].residual / scale, i)
        worst.add("omega/below-theta", r["omega/below-theta"].residual / scale, i)
        worst.add("T/positive", r["T/positive"].residual, i)
        worst.add("T/contraction", r["T/contraction"].residual, i)
        worst.add("T/commutant", r["T/commutant"].residual, i)
        perm = rng.permutation(ideal.shape[1])
        again = reconstruct_omega(theta, SesquilinearForm(A, ideal[:, perm], s[np.ix_(perm, perm)]), cfg.tol)
        worst.add("omega/uniqueness", _maxabs(again.omega - out.omega) / scale, i)
        if data.dim:
            _observe(ModuleMap(_hilbert(data.dim), _hilbert(data.dim), out.T), rng, 1)
    rep = worst.into(Report(), {"omega/form": cfg.thr(1e-8), "omega/below-theta": cfg.thr(1e-9),
                                "T/positive": cfg.thr(1e-9), "T/contraction": cfg.thr(1e-9),
                                "T/commutant": cfg.thr(1e-9), "omega/uniqueness": cfg.thr(1e-10)})
    rep.bound("errors", len(errors), 0, witness=errors or None)
    return rep


def _hilbert(d: int):
    """A ``d``-dimensional Hilbert space as a module over the complex numbers."""
    C = AlgebraSpec((1,))
    return ModuleRep(C, np.eye(d)[None], np.eye(d)[:, :, None, None])


def suite_construct(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("construct")
    worst = Worst()
    errors = []
    n = cfg.count(0.25)
    for i in range(n):
        dense = i % 3 != 2
        phi, t = _small_weight(rng, dense=dense)
        try:
            Ts = [] if not dense else [CpFamilySampler(t, 1.0, seed=int(rng.integers(2 ** 32))).sample_T()]
            built = construct_weight(seed_from_triplet(t, Ts), cfg.tol)
        except OpWeightError as exc:
            errors.append({"instance": i, "error": str(exc)})
            continue
        scale = 1.0 + phi.norm()
        r = built.report
        worst.add("gram-spectra", r["gram-spectra"].residual / scale, i)
        worst.add("kernel-certificate", r["kernel-certificate"].residual / scale, i)
        worst.add("weight/round-trip", _maxabs(built.weight.coeffs - phi.coeffs) / scale, i)
        bad = [c.label for c in r.failures()]
        worst.add("triplet/failures", len(bad), i)
        if dense:
            sampler = CpFamilySampler(t, 1.0, seed=int(rng.integers(2 ** 32)))
            q = None if i % 2 else random_projection(phi.target, rng)
            qm = build_quotient_module(phi, t, q, samples=[sampler.sample() for _ in range(2)], tol=cfg.tol)
            qr = qm.report
            worst.add("U/isometry", qr["U/isometry"].residual / scale, i)
            worst.add("U/unitary", qr["U/unitary"].residual / scale, i)
            worst.add("U/rank", qr["U/rank"].residual, i)
            worst.add("R/transport", max(c.residual for c in qr.checks if c.label.endswith("/transport")) / scale, i)
    rep = worst.into(Report(), {"gram-spectra": cfg.thr(1e-9), "kernel-certificate": cfg.thr(1e-9),
                                "weight/round-trip": cfg.thr(1e-9), "triplet/failures": 0,
                                "U/isometry": cfg.thr(1e-8), "U/unitary": cfg.thr(1e-8), "U/rank": 0,
                                "R/transport": cfg.thr(1e-8)})
    rep.bound("errors", len(errors), 0, witness=errors or None)
    return rep


def _multiblock_weight(rng, max_dim: int = 12):
    while True:
        A = AlgebraSpec(((1, 1), (1, 2), (2, 1), (1, 1, 1))[rng.integers(4)])
        rho = random_kraus_map(A, random_spec(rng), rng)
        phi = Weight.from_cpmap(rho)
        t = build_canonical_ksgns(phi)
        if 0 < t.E.dim <= max_dim:
            return phi, t


def suite_truncating_net(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("truncating-net")
    worst = Worst()
    clause_failures = []
    n = cfg.count(0.5)
    for i in range(n):
        phi, t = _multiblock_weight(rng)
        reg = certify_regular(phi, t=t, tol=cfg.tol)
        if not reg.report.passed:
            clause_failures.append({"instance": i, "checks": [c.label for c in reg.report.failures()]})
        scale = 1.0 + phi.norm()
        norms = 0.0
        for nd in reg.data:
            nr = nd.rho.norm()
            norms = max(norms, abs(op_norm(nd.v) ** 2 - nr), abs(op_norm(nd.w) ** 2 - nr))
            _observe(nd.T, rng, 1)
        worst.add("norms", norms / scale, i)
        final = max(_maxabs((reg.data[-1].rho(x) - phi(x)).mat) for x in phi.source.basis())
        worst.add("final-index", final / scale, i)
        conv = rho_family_convergence(phi, t, reg.data, rng=rng, tol=cfg.tol)
        worst.add("below-weight", conv["below-weight"].residual / scale, i)
    rep = worst.into(Report(), {"norms": cfg.thr(1e-8), "final-index": cfg.thr(1e-10),
                                "below-weight": cfg.thr(1e-9)})
    rep.bound("clause-failures", len(clause_failures), 0, witness=clause_failures or None)
    return rep


def _tiny_regular(rng, max_dim: int):
    while True:
        A = AlgebraSpec(((1,), (2,), (1, 1), (1, 2))[rng.integers(4)])
        B = AlgebraSpec(((1,), (2,), (1, 1))[rng.integers(3)])
        phi = Weight.from_cpmap(random_kraus_map(A, B, rng, 1))
        t = build_canonical_ksgns(phi)
        if 0 < t.E.dim <= max_dim:
            return certify_regular(phi, t=t)


def suite_tensor(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("tensor")
    worst = Worst()
    failures = []
    n = cfg.count(0.1)
    for i in range(n):
        f1 = _tiny_regular(rng, 5)
        f2 = _tiny_regular(rng, max(1, 20 // f1.triplet.E.dim))
        tw = tensor_weight(f1, f2, cfg.tol)
        if not tw.report.passed:
            failures.append({"instance": i, "checks": [c.label for c in tw.report.failures()]})
        scale = 1.0 + tw.weight.norm()
        fac = check_factorization(tw, cfg.tol)
        worst.add("factorization/weight", fac["weight/factorization"].residual / scale, i)
        worst.add("factorization/lambda", fac["lambda/factorization"].residual / scale, i)
        worst.add("dimension-law", tw.report["dimension-law"].residual, i)
        s1 = CpFamilySampler(f1.triplet, 0.9, seed=int(rng.integers(2 ** 32)))
        s2 = CpFamilySampler(f2.triplet, 0.9, seed=int(rng.integers(2 ** 32)))
        tt = check_T_transport(tw, s1.sample(), s2.sample(), cfg.thr(1e-8))
        worst.add("T/transport", tt["T/transport"].residual if "T/transport" in tt else np.inf, i)
        worst.add("product-net/failures", sum(1 for c in tw.report.failures() if c.label.startswith("product-net/")), i)
    rep = worst.into(Report(), {"factorization/weight": cfg.thr(1e-9), "factorization/lambda": cfg.thr(1e-9),
                                "dimension-law": 0, "T/transport": cfg.thr(1e-8), "product-net/failures": 0})
    rep.bound("certification-failures", len(failures), 0, witness=failures or None)
    return rep


def suite_compactness(cfg: SuiteConfig) -> Report:
    rng = cfg.rng("compactness")
    worst = Worst()
    n = cfg.count()
    for i in range(n):
        phi = random_weight(rng, dense=i % 3 != 0)
        t = build_canonical_ksgns(phi)
        res = 0.0
        for c in t.n_basis.T:
            _, r = compactness_criterion(t, phi.source.from_vec(c))
            res = max(res, r)
        worst.add("inner-product", res, i)
    return worst.into(Report(), {"inner-product": cfg.thr(1e-10)})


def suite_inequality(cfg: SuiteConfig) -> Report:
    """Own random probes, then the record of every suite that ran before."""
    rng = cfg.rng("inequality")
    n = cfg.count()
    for i in range(n):
        spec = random_spec(rng)
        c = random_positive(spec, rng)
        algebra_inequality(c, spec.random_element(rng))
    rep = Report()
    rep.bound("worst-relative-slack", max(0.0, MONITOR.worst), INEQUALITY_TOL,
              witness={"observations": MONITOR.count})
    return rep


SUITES: dict[str, Callable[[SuiteConfig], Report]] = {
    "reconstruction": suite_reconstruction,
    "cp-oracles": suite_cp_oracles,
    "dominated": suite_dominated,
    "join": suite_join,
    "monotone": suite_monotone,
    "omega": suite_omega,
    "construct": suite_construct,
    "truncating-net": suite_truncating_net,
    "tensor": suite_tensor,
    "compactness": suite_compactness,
}


def _run_one(name: str, cfg: SuiteConfig) -> Report:
    try:
        return SUITES[name](cfg) if name in SUITES else suite_inequality(cfg)
    except (OpWeightError, AssertionError, np.linalg.LinAlgError) as exc:
        rep = Report()
        rep.flag("aborted", False, witness={"error": f"{type(exc).__name__}: {exc}"})
        return rep


def thread_count() -> int:
    raw = os.environ.get("OPWEIGHT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def run_suites(cfg: SuiteConfig, names: list[str] | None = None, threads: int | None = None) -> Report:
    """Run the named suites (all by default) and the inequality audit last."""
    names = list(SUITES) if names is None else names
    MONITOR.reset()
    threads = threads or thread_count()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda n: _run_one(n, cfg), names))
    else:
        results = [_run_one(n, cfg) for n in names]
    total = Report()
    for name, rep in zip(names, results):
        total.extend(rep, f"{name}/")
    total.extend(_run_one("inequality", cfg), "inequality/")
    return total
