"""Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.

The measurements come from ymflow.suites; every threshold below is restated
independently of the limits stored in the suites.
"""
import math
import time

import numpy as np
import pytest

from ymflow import suites

LOG2_OVER_4PI = 0.0551589  # log(2) / (4 pi) to seven digits


def report(capsys, number, title, items, started=None, budget=None):
    """items: (label, value, ok). Prints one line and returns the overall verdict."""
    if started is not None:
        sec = time.perf_counter() - started
        items = items + [("runtime", f"{sec:.1f}s (budget {budget:g}s)", sec < budget)]
    ok = all(i[2] for i in items)
    detail = "; ".join(f"{lab}={val}" for lab, val, _ in items)
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} :: {detail}")
    return ok


def values(checks):
    return {c.name: c.value for c in checks}


def brute_casimir(alg):
    """sum_a ad_{e_a}^2 built from commutators of the representation matrices."""
    rho = alg.rep_matrices
    ad = np.array([[alg.from_matrix(rho[a] @ rho[b] - rho[b] @ rho[a]) for b in range(alg.dim)] for a in range(alg.dim)])
    ad = np.transpose(ad, (0, 2, 1))  # ad[a] maps e_b to column b
    return sum(m @ m for m in ad)


def test_criterion_1_casimir(capsys):
    from ymflow.lie import get_algebra

    t0 = time.perf_counter()
    checks, data = suites.suite_lie()
    v = values(checks)
    cas = brute_casimir(get_algebra("su2"))
    items = [
        ("lambda", f"{data['lambda']:.15g}", abs(data["lambda"] + 2) <= 1e-12),
        ("brute-force sum ad^2 + 2 id", f"{np.max(np.abs(cas + 2 * np.eye(3))):.1e}", np.max(np.abs(cas + 2 * np.eye(3))) <= 1e-12),
        ("scalar residual", f"{v['ad_Cas scalar residual']:.2e}", v["ad_Cas scalar residual"] <= 1e-12),
        ("centrality", f"{v['ad_Cas centrality']:.2e}", v["ad_Cas centrality"] <= 1e-12),
    ]
    assert report(capsys, 1, "su(2) Casimir eigenvalue -2", items, t0, 1)


def test_criterion_2_norm_sandwich(capsys):
    t0 = time.perf_counter()
    _, data = suites.suite_norms(n=20, N=64, alpha=0.75)
    r = np.array(data["ratios"])
    items = [
        ("fields", len(r), len(r) == 20),
        ("min ratio", f"{r.min():.3f}", r.min() >= 1 / 16),
        ("max ratio", f"{r.max():.3f}", r.max() <= 16),
    ]
    assert report(capsys, 2, "(gr + tri) / alpha in [1/16, 16]", items, t0, 60)


def test_criterion_3_holonomy(capsys):
    t0 = time.perf_counter()
    _, data = suites.suite_holonomy(N=64)
    items = []
    for name, d in data.items():
        items += [
            (f"{name} residual@1/256", f"{d['r256']:.2e}", d["r256"] <= 1e-3),
            (f"{name} ratio", f"{d['r128'] / d['r256']:.2f}", 1.6 <= d["r128"] / d["r256"] <= 2.6),
            (f"{name} Wilson gap", f"{d['wilson_gap']:.1e}", d["wilson_gap"] <= 1e-4),
        ]
    assert report(capsys, 3, "holonomy covariance and Wilson invariance", items, t0, 60)


def test_criterion_4_deturck(capsys):
    t0 = time.perf_counter()
    _, data = suites.suite_deturck(Ns=(32, 64, 128), T=0.01)
    st = data["study"]
    items = [("gaps", ", ".join(f"{g:.2e}" for g in st.gaps), True)]
    items += [(f"order {a}->{b}", f"{o:.2f}", o >= 1.0) for a, b, o in zip(st.Ns, st.Ns[1:], st.orders)]
    assert report(capsys, 4, "DeTurck observed order >= 1", items, t0, 300)


def test_criterion_5_she(capsys):
    t0 = time.perf_counter()
    _, data = suites.suite_she(n_replicas=10_000)
    probes = data["probes"]
    inside = [abs(p.mc_estimate - p.oracle) <= 3 * p.stderr for p in probes]
    seg, tri = data["fits"]
    kappa, tol = 0.4, 0.1
    items = [
        ("probes within 3 s.e.", f"{sum(inside)}/{len(probes)}", len(probes) == 20 and all(inside)),
        ("segment time exp", f"{seg.time_exponent:.3f}", seg.time_exponent >= kappa - tol),
        ("segment size exp", f"{seg.size_exponent:.3f}", seg.size_exponent >= 2 - 2 * kappa - tol),
        ("triangle time exp", f"{tri.time_exponent:.3f}", tri.time_exponent >= kappa - tol),
        ("triangle size exp", f"{tri.size_exponent:.3f}", tri.size_exponent >= 1 - kappa - tol),
    ]
    assert report(capsys, 5, "SHE sampler vs oracle and scaling exponents", items, t0, 600)


def test_criterion_6_renormalisation_constants(capsys):
    from ymflow.mollifier import MollifierSpec
    from ymflow.renorm import cbar, chat, csym_limit, ctilde0, identity_residual

    t0 = time.perf_counter()
    iso = abs(chat(2**-3, 1) - chat(2**-3, 2))
    cb = [cbar(2.0**-k) for k in (5, 6)]
    inc = cb[1] - cb[0]
    _, _, ident = identity_residual(2**-3)
    lim = csym_limit([2.0**-k for k in range(2, 7)])
    ct0 = max(abs(ctilde0(2.0**-k, MollifierSpec("nonanticipative"))) for k in (2, 3, 4))
    items = [
        ("(a) isotropy", f"{iso:.1e}", iso <= 1e-6),
        ("(b) cbar increment", f"{inc:.7f}", abs(inc - LOG2_OVER_4PI) <= 0.05 * LOG2_OVER_4PI),
        ("(c) identity residual", f"{ident:.1e}", ident <= 1e-5),
        ("(d) Cauchy diffs", ", ".join(f"{d:.1e}" for d in lim["cauchy"]), all(b < a for a, b in zip(lim["cauchy"], lim["cauchy"][1:]))),
        ("(e) non-anticipative ctilde0", f"{ct0:.1e}", ct0 <= 1e-8),
    ]
    assert abs(LOG2_OVER_4PI - math.log(2) / (4 * math.pi)) < 5e-8
    assert report(capsys, 6, "renormalisation constants", items, t0, 600)


def test_criterion_7_trees(capsys):
    t0 = time.perf_counter()
    checks, data = suites.suite_trees()
    v = values(checks)
    s_name = next(k for k in v if k.startswith("symmetry factors"))
    items = [
        ("SYM table", v["SYM form/degree table reproduced"], v["SYM form/degree table reproduced"]),
        ("SYM negative forms", v["SYM negative forms reproduced"], v["SYM negative forms reproduced"]),
        ("gauge tables", f"missing={len(data['missing'])}", not data["missing"]),
        ("S = brute force", s_name.split("(")[1].rstrip(")"), not data["bad_S"]),
    ]
    assert report(capsys, 7, "tree tables and symmetry factors", items, t0, 60)


def test_criterion_8_counterterms(capsys):
    t0 = time.perf_counter()
    checks, data = suites.suite_counterterms()
    v = values(checks)
    items = [
        ("SYM residual", f"{data['sym'].residual:.1e}", data["sym"].residual <= 1e-10 and not data["sym"].uncovered),
        ("SYM families", f"{v['SYM family values 3 chat, chat, -cbar']:.1e}", v["SYM family values 3 chat, chat, -cbar"] <= 1e-10),
    ]
    for s in ("B", "Abar"):
        items += [
            (f"{s} residual", f"{v[f'{s} system counterterms']:.1e}", v[f"{s} system counterterms"] <= 1e-8),
            (f"{s} g-spread", f"{v[f'{s} system independent of g']:.1e}", v[f"{s} system independent of g"] <= 1e-8),
        ]
    assert report(capsys, 8, "counterterm identities", items, t0, 60)


@pytest.mark.parametrize("name", sorted(suites.SUITES))
def test_suite_registry_is_complete(name):
    assert callable(suites.SUITES[name])
