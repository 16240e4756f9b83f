"""The Upsilon recursion and its fixed-point cross-check.

upsilon_bar(F, t, tau) returns the jet polynomial d^k D_{o_1}..D_{o_m} F_t with
every slot filled by the Upsilon of the corresponding branch; noise branches
become the placeholders psi_j, numbered by depth-first order of the noise leaves.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from .jet import JetTerm, D, Evaluator, partial_k, psi, substitute
from .labels import ZERO, sdeg
from .tree import ONE, node, noise_leaves, symmetry_factor, n_edges


class Upsilon:
    def __init__(self, F, labels, rule=None):
        self.F = F
        self.labels = labels
        self.rule = rule
        self._memo = {}

    def bar(self, t, nd, offset=0):
        """Unnormalised bar-Upsilon_t[nd] as a JetTerm (zero if I_t(nd) does not conform)."""
        key = (t, nd, offset)
        if key in self._memo:
            return self._memo[key]
        out = self._compute(t, nd, offset)
        self._memo[key] = out
        return out

    def _compute(self, t, nd, offset):
        lab = self.labels[t]
        if lab.is_noise or t not in self.F:
            return JetTerm()
        if self.rule is not None and not self.rule.conforms(nd, t):
            return JetTerm()
        term = self.F[t]
        edges = nd[1]
        for j, (l2, p, _) in enumerate(edges):
            term = D(term, (l2, p), j)
            if not term:
                return term
        term = partial_k(term, nd[0])
        off = offset
        for j, (l2, p, c) in enumerate(edges):
            if self.labels[l2].is_noise:
                val = psi(off) if c == ONE else JetTerm()
                off += 1
            else:
                val = self.bar(l2, c, off)
                off += len(noise_leaves(c, self.labels))
            term = substitute(term, j, val)
            if not term:
                return term
        return term

    def bold(self, t, nd):
        """Normalised Upsilon_t[nd] / S(nd) as (JetTerm, S)."""
        return self.bar(t, nd), symmetry_factor(nd)


def casimir_contract(term, alg, jet, n_noise=2, slots=(0, 1)):
    """Sum over an orthonormal basis with both noise placeholders set to e_a."""
    out = 0.0
    eye = np.eye(alg.dim)
    for a in range(alg.dim):
        psis = {j: eye[a] for j in range(n_noise)}
        out = out + Evaluator(alg, jet, psis)(term)
    return out


# ---------------------------------------------------------------------------
# random jets

class Jet:
    """Concrete jet: kernel components random, noise components zero, u = Ad_g if given."""

    def __init__(self, alg, rng, U=None, op_names=("u",), scale=1.0, zero_names=()):
        self.alg = alg
        self.rng = rng
        self.U = U
        self.op_names = set(op_names)
        self.scale = scale
        self.zero_names = set(zero_names)
        self._vals = {}

    def __call__(self, name, p):
        key = (name, tuple(p))
        v = self._vals.get(key)
        if v is None:
            dim = self.alg.dim
            if name.startswith("l") or name in self.zero_names:
                v = np.zeros((dim, dim)) if name in self.op_names else np.zeros(dim)
            elif name in self.op_names:
                if tuple(p) == ZERO and self.U is not None:
                    v = np.asarray(self.U, float)
                else:
                    v = self.scale * self.rng.standard_normal((dim, dim))
            else:
                v = self.scale * self.rng.standard_normal(dim)
            self._vals[key] = v
        return v


# ---------------------------------------------------------------------------
# fixed-point iteration on truncated expansions


def _merge(n1, n2):
    k = tuple(a + b for a, b in zip(n1[0], n2[0]))
    return node(n1[1] + n2[1], k)


class _Expansion:
    """Truncated tree expansion: dict node -> ndarray (vector or operator)."""

    def __init__(self, alg, max_edges, max_poly):
        self.alg = alg
        self.max_edges = max_edges
        self.max_poly = max_poly

    def ok(self, nd):
        return n_edges(nd) <= self.max_edges and sdeg(nd[0]) <= self.max_poly

    def product(self, x, y, op):
        out = {}
        for n1, v1 in x.items():
            e1 = n_edges(n1)
            for n2, v2 in y.items():
                if e1 + n_edges(n2) > self.max_edges:
                    continue
                nd = _merge(n1, n2)
                if sdeg(nd[0]) > self.max_poly:
                    continue
                v = op(v1, v2)
                out[nd] = out[nd] + v if nd in out else v
        return out

    def evaluate(self, term, env):
        total = {}
        cache = {}

        def mono(e):
            if e in cache:
                return cache[e]
            tag = e[0]
            if tag == "v":
                r = env(e[1], e[2])
            elif tag == "br":
                r = self.product(mono(e[1]), mono(e[2]), self.alg.bracket)
            elif tag == "ad":
                r = {k: self.alg.ad(v) for k, v in mono(e[1]).items()}
            elif tag in ("comp", "app"):
                r = self.product(mono(e[1]), mono(e[2]), lambda a, b: a @ b)
            else:
                raise ValueError(f"unexpected monomial {e[0]} in a nonlinearity")
            cache[e] = r
            return r

        for e, c in term.terms.items():
            for nd, v in mono(e).items():
                w = float(c) * v
                total[nd] = total[nd] + w if nd in total else w
        return total


def fixed_point_upsilon(F, labels, alg, jet, psi_by_label, max_edges=3, max_poly=0, max_iter=20):
    """Iterate A_t <- A_t + I_t F_t(A-hat) on truncated expansions.

    Returns dict (t, node) -> coefficient, which should equal Upsilon_t[node] / S(node)
    with every noise leaf of label l replaced by psi_by_label[l].
    """
    ex = _Expansion(alg, max_edges, max_poly)
    kernels = [lab.name for lab in labels.kernels() if lab.name in F]
    R = {t: {} for t in kernels}
    polys = [k for k in _polys(max_poly)]

    def env(name, p):
        out = {}
        if labels[name].is_noise:
            if p == ZERO:
                out[node([(name, ZERO, ONE)])] = psi_by_label[name]
            return out
        for tau, v in R.get(name, {}).items():
            nd = node([(name, p, tau)])
            if ex.ok(nd):
                out[nd] = v
        for k in polys:
            q = tuple(a + b for a, b in zip(p, k))
            kf = factorial(k[0]) * factorial(k[1]) * factorial(k[2])
            out[node((), k)] = jet(name, q) / kf
        return out

    for _ in range(max_iter):
        new = {t: ex.evaluate(F[t], env) for t in kernels}
        if _same(new, R):
            return {(t, nd): v for t in kernels for nd, v in new[t].items()}
        R = new
    raise RuntimeError("fixed-point expansion did not stabilise")


def _polys(max_poly):
    out = []
    for k0 in range(max_poly // 2 + 1):
        for k1 in range(max_poly + 1):
            for k2 in range(max_poly + 1):
                if 2 * k0 + k1 + k2 <= max_poly:
                    out.append((k0, k1, k2))
    return out


def _same(a, b):
    for t in a:
        if set(a[t]) != set(b.get(t, {})):
            return False
        for nd, v in a[t].items():
            if not np.allclose(v, b[t][nd], rtol=0, atol=1e-13):
                return False
    return True
