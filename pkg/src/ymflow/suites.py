"""Measurement suites behind `ymflow verify`: each returns named measurements with their pass/fail limits."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    name: str
    value: object
    limit: object
    kind: str  # "<=", ">=", "in", "true"
    passed: bool = field(init=False)

    def __post_init__(self):
        v, L = self.value, self.limit
        if self.kind == "<=":
            self.passed = bool(v <= L)
        elif self.kind == ">=":
            self.passed = bool(v >= L)
        elif self.kind == "in":
            self.passed = bool(L[0] <= v <= L[1])
        else:
            self.passed = bool(v)

    def to_json(self):
        conv = lambda x: [float(y) for y in x] if isinstance(x, (tuple, list)) else (x if isinstance(x, (bool, str)) else float(x))
        return {"name": self.name, "value": conv(self.value), "limit": conv(self.limit), "kind": self.kind, "pass": self.passed}


@dataclass
class SuiteResult:
    suite: str
    checks: list
    data: dict
    seconds: float

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_json(self):
        return {"suite": self.suite, "pass": self.passed, "seconds": self.seconds, "checks": [c.to_json() for c in self.checks]}


# ---------------------------------------------------------------------------


def suite_lie():
    from .lie import casimir_centrality, casimir_lambda, get_algebra

    alg = get_algebra("su2")
    lam, resid = casimir_lambda(alg)
    cen = casimir_centrality(alg)
    return [
        Check("su2 lambda + 2", abs(lam + 2), 1e-12, "<="),
        Check("ad_Cas scalar residual", resid, 1e-12, "<="),
        Check("ad_Cas centrality", cen, 1e-12, "<="),
    ], {"lambda": lam}


def norm_fields(n=20, N=64, kmax=3):
    from .oneform import embed_lattice, random_trig_form

    return [embed_lattice(random_trig_form(np.random.default_rng(s), kmax=kmax).lattice(N)) for s in range(n)]


def suite_norms(n=20, N=64, alpha=0.75):
    from .oneform import SampleFamily, norm_alpha, norm_gr, norm_tri

    fam = SampleFamily()
    ratios, rows = [], []
    for s, A in enumerate(norm_fields(n, N)):
        na, ng, nt = norm_alpha(A, alpha, fam), norm_gr(A, alpha, fam), norm_tri(A, alpha, fam)
        ratios.append((ng.value + nt.value) / na.value)
        rows.append({"field": s, "alpha": na, "gr": ng, "tri": nt})
    return [
        Check("min (gr + tri) / alpha", min(ratios), 1 / 16, ">="),
        Check("max (gr + tri) / alpha", max(ratios), 16.0, "<="),
    ], {"ratios": ratios, "rows": rows}


def holonomy_fixture(N=64):
    from .gauge import GaugeTransform
    from .oneform import circle, embed_lattice, random_trig_form, rectangle

    f = random_trig_form(np.random.default_rng(3), kmax=2, amplitude=0.2)
    ph = random_trig_form(np.random.default_rng(7), kmax=1, amplitude=0.2)
    A = embed_lattice(f.lattice(N))
    g = GaugeTransform.from_function(lambda p: ph.values(p)[:, 0, :], N)
    loops = {"rectangle": rectangle((0.1, 0.05), 0.2, 0.15), "circle": circle((0.0, 0.0), 0.1)}
    return A, g, loops


def suite_holonomy(N=64):
    from .gauge import GaugedSegmentFunction, holonomy_covariance_residual, wilson_loop

    A, g, loops = holonomy_fixture(N)
    Ag = GaugedSegmentFunction(A, g)
    checks, data = [], {}
    for name, loop in loops.items():
        r128 = holonomy_covariance_residual(A, g, loop, 1 / 128)
        r256 = holonomy_covariance_residual(A, g, loop, 1 / 256)
        w = abs(wilson_loop(Ag, loop, 1 / 256) - wilson_loop(A, loop, 1 / 256))
        checks += [
            Check(f"{name}: covariance residual at mesh 1/256", r256, 1e-3, "<="),
            Check(f"{name}: refinement ratio 1/128 -> 1/256", r128 / r256, (1.6, 2.6), "in"),
            Check(f"{name}: Wilson loop gauge gap", w, 1e-4, "<="),
        ]
        data[name] = {"r128": r128, "r256": r256, "wilson_gap": w}
    return checks, data


def suite_she(n_replicas=10_000, seed=0):
    from .she import check_probes, exponent_check

    probes = check_probes(n_replicas=n_replicas, seed=seed)
    seg, tri = exponent_check("segment"), exponent_check("triangle")
    n_ok = sum(p.passed for p in probes)
    checks = [
        Check(f"probes within 3 s.e. ({len(probes)} probes)", n_ok / len(probes), 1.0, ">="),
        Check("segment time exponent >= kappa - 0.1", seg.time_exponent, seg.time_admissible - seg.tolerance, ">="),
        Check("segment size exponent >= 2 - 2 kappa - 0.1", seg.size_exponent, seg.size_admissible - seg.tolerance, ">="),
        Check("triangle time exponent >= kappa - 0.1", tri.time_exponent, tri.time_admissible - tri.tolerance, ">="),
        Check("triangle size exponent >= 1 - kappa - 0.1", tri.size_exponent, tri.size_admissible - tri.tolerance, ">="),
    ]
    return checks, {"probes": probes, "fits": [seg, tri]}


def suite_deturck(Ns=(32, 64, 128), T=0.01, seed=0):
    from .spde import deturck_convergence

    st = deturck_convergence(Ns, T, seed)
    return [Check("min observed order", st.min_order, 1.0, ">=")], {"study": st}


def suite_renorm():
    from .mollifier import MollifierSpec
    from .renorm import LOG2_OVER_4PI, cbar, chat, csym_limit, ctilde0, identity_residual

    iso = abs(chat(2**-3, 1) - chat(2**-3, 2))
    cb = [cbar(2.0**-k) for k in range(2, 7)]
    last = cb[-1] - cb[-2]
    _, _, ident = identity_residual(2**-3)
    lim = csym_limit([2.0**-k for k in range(2, 7)])
    ct0 = max(abs(ctilde0(2.0**-k, MollifierSpec("nonanticipative"))) for k in (2, 3, 4))
    return [
        Check("chat isotropy |j=1 - j=2|", iso, 1e-6, "<="),
        Check("relative gap of cbar(2^-6) - cbar(2^-5) to log2/(4 pi)", abs(last - LOG2_OVER_4PI) / LOG2_OVER_4PI, 0.05, "<="),
        Check("csym identity residual", ident, 1e-5, "<="),
        Check("csym Cauchy differences strictly decreasing", lim["decreasing"], True, "true"),
        Check("non-anticipative ctilde0", ct0, 1e-8, "<="),
    ], {"cbar": cb, "csym": lim}


def suite_trees():
    from collections import defaultdict

    from .trees import brute_symmetry_factor, enumerate_trees, gauge_rule, negative_trees, sym_rule
    from .trees.tables import SYM_NEGATIVE_FORMS, SYM_TABLE, colour_instances, gauge_table

    rule = sym_rule()
    trees = enumerate_trees(rule)
    by_deg = defaultdict(set)
    for t in trees:
        by_deg[str(t.degree)].add(t.form)
    neg = {t.form for t in negative_trees(rule)}
    grule = gauge_rule()
    gneg = negative_trees(grule)
    gnodes = {t.node for t in gneg}
    gforms = {t.form for t in gneg}
    missing = [
        (system, row)
        for system in ("B", "Abar")
        for row, (form, tmpl) in gauge_table(system).items()
        if form not in gforms or not colour_instances(tmpl, grule) <= gnodes
    ]
    small = [t for t in trees + gneg if t.n_edges <= 6]
    bad_S = [t.form for t in small if t.symmetry != brute_symmetry_factor(t.node)]
    return [
        Check("SYM form/degree table reproduced", dict(by_deg) == SYM_TABLE, True, "true"),
        Check("SYM negative forms reproduced", neg == SYM_NEGATIVE_FORMS, True, "true"),
        Check("gauge tables reproduced", not missing, True, "true"),
        Check(f"symmetry factors = brute force ({len(small)} trees <= 6 edges)", not bad_S, True, "true"),
    ], {"missing": missing, "bad_S": bad_S, "n_sym": len(trees), "n_gauge": len(gneg)}


def suite_counterterms(eps=2**-3, n_g=10):
    from .lie import casimir_lambda, get_algebra, random_group
    from .renorm import compute_constants
    from .trees import counterterm_gauge_system, counterterm_sym
    from .trees.counterterm import constrained_jet

    alg = get_algebra("su2")
    lam, _ = casimir_lambda(alg)
    c = compute_constants(eps, with_error=False)
    res = counterterm_sym(c)
    A = res.expected["a1"] / (lam * c.csym_eps)
    fam = {
        "I(I'(Ξ))I'(Ξ)": 3 * c.chat_eps,
        "I(Ξ)I'(I'(Ξ))": c.chat_eps,
        "I(Ξ)I(Ξ)": -c.cbar_eps,
    }
    scale = max(1.0, float(np.max(np.abs(lam * A))))
    fam_err = max(float(np.max(np.abs(res.per_form[("a1", f)] - v * lam * A))) / scale for f, v in fam.items())
    checks = [
        Check("SYM counterterm = lambda (4 chat - cbar) A", res.residual, 1e-10, "<="),
        Check("SYM family values 3 chat, chat, -cbar", fam_err, 1e-10, "<="),
    ]
    data = {"sym": res}
    for system in ("B", "Abar"):
        resid, vals = 0.0, []
        for k in range(n_g):
            g = random_group(np.random.default_rng(100 + k), alg)
            r = counterterm_gauge_system(c, system, jet=constrained_jet(alg, np.random.default_rng(0), g))
            resid = max(resid, r.residual)
            vals.append(np.concatenate([np.ravel(r.values[t]) for t in sorted(r.values)]))
        vals = np.array(vals)
        spread = float(np.max(np.abs(vals - vals[0]))) / max(1.0, float(np.max(np.abs(vals))))
        checks += [
            Check(f"{system} system counterterms", resid, 1e-8, "<="),
            Check(f"{system} system independent of g", spread, 1e-8, "<="),
        ]
        data[system] = vals
    return checks, data


SUITES = {
    "lie": suite_lie,
    "norms": suite_norms,
    "holonomy": suite_holonomy,
    "she": suite_she,
    "deturck": suite_deturck,
    "renorm": suite_renorm,
    "trees": suite_trees,
    "counterterms": suite_counterterms,
}


def run_suite(name, **kw):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    t0 = time.perf_counter()
    checks, data = SUITES[name](**kw)
    return SuiteResult(name, checks, data, time.perf_counter() - t0)
