from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymflow.lie import get_algebra
from ymflow.renorm import compute_constants
from ymflow.trees import (
    Deg,
    JetConstraintError,
    Upsilon,
    bphz_vanishing_filter,
    brute_symmetry_factor,
    counterterm_gauge_system,
    counterterm_sym,
    degree,
    enumerate_trees,
    fixed_point_upsilon,
    gauge_rule,
    get_rule,
    negative_trees,
    sym_nonlinearity,
    sym_rule,
    symmetry_factor,
    tree_hash,
)
from ymflow.trees.jet import Evaluator
from ymflow.trees.labels import ZERO
from ymflow.trees.tables import SYM_NEGATIVE_FORMS, SYM_TABLE
from ymflow.trees.tree import X, edge, from_graph, isomorphic_bruteforce, node, noise_leaves, planted, shuffled_graph
from ymflow.trees.upsilon import Jet

RULE = sym_rule()
L = RULE.labels
TREES = enumerate_trees(RULE)
SMALL = [t for t in TREES if t.n_edges <= 5]
CHERRY = node([edge("a2", planted("l2"))] * 2)


@pytest.fixture(scope="module")
def alg():
    return get_algebra("su2")


@pytest.fixture(scope="module")
def consts():
    return compute_constants(2**-3, with_error=False)


def test_sym_table_reproduced():
    by_deg = {}
    for t in TREES:
        by_deg.setdefault(str(t.degree), set()).add(t.form)
    assert by_deg == SYM_TABLE
    assert {t.form for t in negative_trees(RULE)} == SYM_NEGATIVE_FORMS


def test_degree_arithmetic():
    assert str(degree(planted("l1"), L)) == "-2-1*k"
    assert str(degree(node([edge("a1", planted("l1"))] * 2), L)) == "0-2*k"
    d = Deg.parse("0-2*k")
    assert d == Deg(Fraction(0), Fraction(-2))
    assert Deg.parse(str(Deg.of(Fraction(-1, 2), 3))) == Deg.of(Fraction(-1, 2), 3)
    assert d.below(Deg.of(0), (0, Fraction(1, 10)))


def test_symmetry_factor_examples():
    assert symmetry_factor(CHERRY) == 2
    assert symmetry_factor(node([], X(1, 1))) == 2
    assert symmetry_factor(node([edge("a1", planted("l1"))] * 3)) == 6


def test_symmetry_factor_matches_brute_force():
    assert all(t.symmetry == brute_symmetry_factor(t.node) for t in SMALL)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, len(TREES) - 1), st.integers(0, 2**31 - 1))
def test_hash_invariant_under_relabelling(i, seed):
    nd = TREES[i].node
    copy = from_graph(*shuffled_graph(nd, np.random.default_rng(seed)))
    assert tree_hash(copy) == tree_hash(nd)
    if TREES[i].n_edges <= 6:
        assert isomorphic_bruteforce(nd, copy)


def test_hashes_distinguish_trees():
    assert len({t.hash for t in TREES}) == len(TREES)
    a, b = node([edge("a1", planted("l1"))]), node([edge("a1", planted("l2"))])
    assert not isomorphic_bruteforce(a, b)


def test_vanishing_filter_reasons():
    assert bphz_vanishing_filter(planted("l1"), L) == (True, "odd-noises")
    assert bphz_vanishing_filter(node([edge("a1", planted("l1")), edge("a1", planted("l1"), 1)]), L) == (
        True,
        "derivative-parity",
    )
    assert bphz_vanishing_filter(node([edge("a1", planted("l1")), edge("a2", planted("l2"))]), L) == (True, "index-mismatch")
    assert bphz_vanishing_filter(node([edge("a1", planted("l1")), edge("a1", planted("l1"))], X(1)), L) == (
        True,
        "polynomial-parity",
    )
    assert bphz_vanishing_filter(CHERRY, L) == (False, None)


def test_upsilon_of_planted_noise_is_the_noise(alg):
    ups = Upsilon(sym_nonlinearity(), L, RULE.normal_extension())
    p = np.random.default_rng(0).standard_normal(3)
    ev = Evaluator(alg, Jet(alg, np.random.default_rng(1)), {0: p})
    assert np.allclose(ev(ups.bar("a1", planted("l1"))), p)
    assert not ups.bar("a2", planted("l1"))
    assert not ups.bar("a1", node([edge("l1")], X(1)))


def test_upsilon_cherry_is_double_bracket(alg):
    ups = Upsilon(sym_nonlinearity(), L, RULE.normal_extension())
    jet = Jet(alg, np.random.default_rng(2))
    p = np.random.default_rng(3).standard_normal(3)
    val = Evaluator(alg, jet, {0: p, 1: p})(ups.bar("a1", CHERRY)) / symmetry_factor(CHERRY)
    A1 = jet("a1", ZERO)
    assert np.allclose(val, alg.bracket(p, alg.bracket(p, A1)), atol=1e-13)


@pytest.mark.parametrize("max_edges,max_poly", [(3, 0), (2, 1)])
def test_fixed_point_expansion_matches_recursion(alg, max_edges, max_poly):
    rng = np.random.default_rng(0)
    jet = Jet(alg, rng)
    psi = {"l1": rng.standard_normal(3), "l2": rng.standard_normal(3)}
    F = sym_nonlinearity()
    fp = fixed_point_upsilon(F, L, alg, jet, psi, max_edges=max_edges, max_poly=max_poly)
    ups = Upsilon(F, L)
    worst = 0.0
    for (t, nd), v in fp.items():
        ev = Evaluator(alg, jet, {j: psi[lab] for j, lab in enumerate(noise_leaves(nd, L))})
        u = ev(ups.bar(t, nd)) / symmetry_factor(nd)
        worst = max(worst, float(np.max(np.abs(u - v))) / max(1.0, float(np.max(np.abs(u)))))
    assert len(fp) > 50
    assert worst < 1e-10


def test_sym_counterterm(consts, alg):
    res = counterterm_sym(consts)
    assert res.ok(1e-10)
    lam = -2.0
    A = res.expected["a1"] / (lam * consts.csym_eps)
    fams = {"I(I'(Ξ))I'(Ξ)": 3 * consts.chat_eps, "I(Ξ)I'(I'(Ξ))": consts.chat_eps, "I(Ξ)I(Ξ)": -consts.cbar_eps}
    for form, c in fams.items():
        assert np.allclose(res.per_form[("a1", form)], c * lam * A, atol=1e-10)


@pytest.mark.parametrize("system", ["B", "Abar"])
def test_gauge_counterterms(consts, system):
    res = counterterm_gauge_system(consts, system)
    assert res.ok(1e-8)
    assert not np.any(res.values["u"])


def test_gauge_counterterm_rejects_unconstrained_jet(consts, alg):
    with pytest.raises(JetConstraintError):
        counterterm_gauge_system(consts, "B", jet=Jet(alg, np.random.default_rng(0)))


def test_gauge_rule_has_negative_trees():
    neg = negative_trees(gauge_rule())
    assert neg and all(t.degree.below(Deg.of(0), (0, Fraction(1, 10))) for t in neg)
    with pytest.raises(ValueError):
        get_rule("phi4")
