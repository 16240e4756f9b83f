"""Vanishing filters, BPHZ characters on two-noise trees, and counterterm assembly."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..lie import casimir_lambda, random_group, Ad_matrix
from .enumerate import negative_trees
from .jet import Evaluator
from .labels import ZERO
from .nonlinearity import sym_nonlinearity, gauge_nonlinearity
from .rules import sym_rule, gauge_rule
from .upsilon import Upsilon, Jet

REASONS = ("odd-noises", "derivative-parity", "polynomial-parity", "index-mismatch")


class JetConstraintError(ValueError):
    """The jet is outside the constrained set: U must be a unitary Lie-algebra automorphism."""


def _collect(nd, labels, acc):
    k = nd[0]
    for r in (1, 2):
        acc["poly", r] += k[r]
    for lab, p, c in nd[1]:
        L = labels[lab]
        for r in (1, 2):
            acc["deriv", r] += p[r]
        if L.is_noise:
            acc["noise"] += 1
            acc["idx", L.index] += 1
        else:
            _collect(c, labels, acc)
    return acc


def bphz_vanishing_filter(nd, labels):
    """(True, reason) when the BPHZ character of the tree vanishes identically.

    Odd noise counts vanish by Gaussianity; an odd number of x_r-derivatives and
    x_r-monomials vanishes by reflecting x_r; noise components with different
    spatial indices are independent.
    """
    acc = _collect(nd, labels, Counter())
    if acc["noise"] % 2:
        return True, "odd-noises"
    for r in (1, 2):
        if (acc["deriv", r] + acc["poly", r]) % 2:
            return True, "polynomial-parity" if acc["poly", r] else "derivative-parity"
    for key, n in acc.items():
        if key[0] == "idx" and n % 2:
            return True, "index-mismatch"
    return False, None


# characters as multiples of Cas, keyed by index-free form
def sym_character_table(consts, checks=(0.37, -0.21)):
    """checks: stand-in prefactors for the X-decorated families (their Upsilon vanishes)."""
    return {
        "I(Ξ)I(Ξ)": -consts.cbar_eps,
        "I(I'(Ξ))I'(Ξ)": -consts.chat_eps,
        "I(Ξ)I'(I'(Ξ))": consts.chat_eps,
        "I(Ξ)I'(XΞ)": checks[0],
        "I(XΞ)I'(Ξ)": checks[1],
    }


def gauge_character_table(consts, checks=(0.37, -0.21, 0.29, -0.13), c_h=0.41):
    """Both tables of the gauge-transformed system.

    The barred system uses the delta -> 0 limits of its constants; for the
    I^u tree this is C~^{0,eps} = (K * K^eps)(0).
    """
    cb, ch = consts.cbar_eps, consts.chat_eps
    return {
        # B system: noise chi^eps * xi (Ξb), kernels I
        "I(Ξb)I(Ξb)": -cb,
        "I(I'(Ξb))I'(Ξb)": -ch,
        "I(Ξb)I'(I'(Ξb))": ch,
        "I(Ξb)I'(XΞb)": checks[0],
        "I(XΞb)I'(Ξb)": checks[1],
        "U(I(Ξb))Ξb": -consts.ctilde_eps,
        "H(I'(Ξb))I'(Ξb)": c_h,
        "I(Ξb)H'(I'(Ξb))": -c_h,
        # barred system: noise xi (Ξ), kernels Ib
        "Ib(Ξ)Ib(Ξ)": -cb,
        "I(Ib'(Ξ))Ib'(Ξ)": -ch,
        "Ib(Ξ)I'(Ib'(Ξ))": ch,
        "Ib(Ξ)Ib'(XΞ)": checks[2],
        "Ib(XΞ)Ib'(Ξ)": checks[3],
        "U(Ib(Ξ))Ξ": -consts.ctilde0_eps,
        "H(Ib'(Ξ))Ib'(Ξ)": c_h,
        "Ib(Ξ)H'(Ib'(Ξ))": -c_h,
    }


@dataclass
class Character:
    table: dict
    labels: object
    missing: list = field(default_factory=list)

    def __call__(self, tree):
        vanish, _ = bphz_vanishing_filter(tree.node, self.labels)
        if vanish:
            return 0.0
        return self.table.get(tree.form)


def _contract(term, alg, jet):
    out = 0.0
    eye = np.eye(alg.dim)
    for a in range(alg.dim):
        out = out + Evaluator(alg, jet, {0: eye[a], 1: eye[a]})(term)
    return out


def _surviving(trees, labels):
    return [t for t in trees if not bphz_vanishing_filter(t.node, labels)[0]]


@dataclass
class CountertermResult:
    values: dict  # label -> vector
    expected: dict
    per_form: dict  # (label, form) -> vector
    residual: float
    uncovered: list  # surviving trees with no character and non-zero Upsilon

    def ok(self, tol):
        return self.residual <= tol and not self.uncovered


def counterterm_sym(constants, A=None, alg=None, rng=None, trees=None):
    """sum_tau l[tau] Upsilon_{a_i}[tau](A) / S(tau), contracted with Cas, for i = 1, 2."""
    from ..lie import get_algebra

    alg = alg or get_algebra("su2")
    lam, _ = casimir_lambda(alg)
    rng = rng or np.random.default_rng(0)
    rule = sym_rule()
    labels = rule.labels
    trees = trees if trees is not None else negative_trees(rule)
    jet = Jet(alg, rng)
    if A is not None:
        for i in (1, 2):
            jet._vals[(f"a{i}", ZERO)] = np.asarray(A[i - 1], float)
    ups = Upsilon(sym_nonlinearity(), labels, rule.normal_extension())
    char = Character(sym_character_table(constants), labels)
    return _assemble(ups, char, _surviving(trees, labels), ("a1", "a2"), alg, jet,
                     {f"a{i}": lam * (4 * constants.chat_eps - constants.cbar_eps) * jet(f"a{i}", ZERO) for i in (1, 2)})


def _assemble(ups, char, trees, targets, alg, jet, expected):
    values = {t: np.zeros_like(expected[t], dtype=float) for t in targets}
    per_form = {}
    uncovered = []
    for tree in trees:
        coef = char(tree)
        for t in targets:
            term = ups.bar(t, tree.node)
            if not term:
                continue
            if coef is None:
                probe = Evaluator(alg, jet, {j: np.random.default_rng(j).standard_normal(alg.dim) for j in range(8)})(term)
                if np.max(np.abs(probe)) > 1e-12:
                    uncovered.append((t, tree.form))
                continue
            v = coef * _contract(term, alg, jet) / tree.symmetry
            values[t] = values[t] + v
            key = (t, tree.form)
            per_form[key] = per_form.get(key, 0) + v
    scale = max(1.0, max(np.max(np.abs(e)) for e in expected.values()))
    resid = max(float(np.max(np.abs(values[t] - expected[t]))) for t in targets) / scale
    return CountertermResult(values, expected, per_form, resid, uncovered)


def constrained_jet(alg, rng, g=None, scale=0.7):
    """Jet in the constrained set: U = Ad_g, all other kernel components random."""
    if g is None:
        g = random_group(rng, alg)
    U = Ad_matrix(g, alg)
    check_constrained(U, alg)
    return Jet(alg, rng, U=U, scale=scale)


def check_constrained(U, alg, tol=1e-10):
    U = np.asarray(U, float)
    if np.max(np.abs(U.T @ U - np.eye(alg.dim))) > tol:
        raise JetConstraintError("U is not orthogonal (unitary on the algebra)")
    E = np.eye(alg.dim)
    lhs = alg.bracket(E[:, None, :], E[None, :, :]) @ U.T
    UE = E @ U.T  # row a is U e_a
    rhs = alg.bracket(UE[:, None, :], UE[None, :, :])
    if np.max(np.abs(lhs - rhs)) > tol:
        raise JetConstraintError("U does not preserve the bracket")


def counterterm_gauge_system(constants, system="B", alg=None, rng=None, g=None, jet=None, trees=None, c1=0, c2=0):
    """Counterterms for every kernel label of the B system or the barred system.

    Expected values: B system a_i -> lam C_SYM B_i + lam C~ h_i; barred system
    a_i -> lam (4C^ - C-) Abar_i and m_i -> lam C~^0 h_i; u, h and the B-system m
    receive nothing.
    """
    from ..lie import get_algebra

    alg = alg or get_algebra("su2")
    lam, _ = casimir_lambda(alg)
    rng = rng or np.random.default_rng(0)
    rule = gauge_rule()
    labels = rule.labels
    trees = trees if trees is not None else negative_trees(rule)
    if jet is None:
        jet = constrained_jet(alg, rng, g)
    else:
        check_constrained(jet("u", ZERO), alg)
    ups = Upsilon(gauge_nonlinearity(system, c1, c2), labels, rule.normal_extension())
    char = Character(gauge_character_table(constants), labels)
    targets = ("a1", "a2", "m1", "m2", "h1", "h2", "u")
    zero_v = np.zeros(alg.dim)
    exp = {t: zero_v for t in targets}
    exp["u"] = np.zeros((alg.dim, alg.dim))
    chat, cbar = constants.chat_eps, constants.cbar_eps
    for i in (1, 2):
        h = jet(f"h{i}", ZERO)
        if system == "B":
            exp[f"a{i}"] = lam * (4 * chat - cbar) * jet(f"a{i}", ZERO) + lam * constants.ctilde_eps * h
        else:
            Abar = jet(f"a{i}", ZERO) + jet(f"m{i}", ZERO)
            exp[f"a{i}"] = lam * (4 * chat - cbar) * Abar
            exp[f"m{i}"] = lam * constants.ctilde0_eps * h
    res = _assemble(ups, char, _surviving(trees, labels), targets, alg, jet, exp)
    return res
