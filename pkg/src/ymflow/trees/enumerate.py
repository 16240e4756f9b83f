"""Enumeration of rule-conforming decorated trees below a degree bound.

Budgets are tracked at both ends of the kappa interval; degrees are affine in
kappa, so a tree below the bound at both ends is below it on the whole interval.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

from .labels import Deg, ZERO, sdeg
from .rules import Rule, sub_multisets
from .tree import DecoratedTree, ONE, degree, node, render_form, symmetry_factor, is_planted, n_edges

POLY_POLICIES = ("noise", "full")


class DivergenceError(RuntimeError):
    """Enumeration did not terminate within its budget; the rule is likely not subcritical."""


def _multi_indices(max_sdeg):
    out = []
    for k0 in range(max_sdeg // 2 + 1):
        for k1 in range(max_sdeg + 1):
            for k2 in range(max_sdeg + 1):
                k = (k0, k1, k2)
                if sdeg(k) <= max_sdeg:
                    out.append(k)
    return sorted(out, key=lambda k: (sdeg(k), k))


class Enumerator:
    def __init__(self, rule: Rule, kappa_interval=None, poly_policy="noise", max_trees=200_000, max_iter=200):
        if poly_policy not in POLY_POLICIES:
            raise ValueError(f"poly_policy must be one of {POLY_POLICIES}")
        self.rule = rule.normal_extension()
        self.labels = rule.labels
        iv = kappa_interval or self.labels.kappa_interval
        self.ends = tuple(Fraction(x) for x in iv)
        if not (0 <= self.ends[0] < self.ends[1]):
            raise ValueError("kappa interval must be a non-empty subinterval of [0, inf)")
        self.poly_policy = poly_policy
        self.max_trees = max_trees
        self._count = 0
        self._deg_cache = {}
        self._mins = self._planted_minima(max_iter)
        self._gen = lru_cache(maxsize=None)(self._gen_impl)

    def _at(self, d):
        return tuple(d.at(k) for k in self.ends)

    def edge_deg(self, lab, p):
        return self._at(self.labels.deg(lab) - sdeg(p))

    def _planted_minima(self, max_iter):
        """Lowest node degree above each label, at both kappa endpoints (fixed point)."""
        inf = float("inf")
        m = {lab.name: ((0, 0) if lab.is_noise else (inf, inf)) for lab in self.labels}
        for _ in range(max_iter):
            changed = False
            for lab in self.labels.kernels():
                best = m[lab.name]
                for typ in self.rule.types[lab.name]:
                    tot = [0, 0]
                    for l2, p in typ:
                        ed = self.edge_deg(l2, p)
                        for s in range(2):
                            tot[s] = tot[s] + ed[s] + m[l2][s]
                    best = (min(best[0], tot[0]), min(best[1], tot[1]))
                if best != m[lab.name]:
                    m[lab.name] = best
                    changed = True
            if not changed:
                return m
        raise DivergenceError("planted minimum degrees do not stabilise; rule is not subcritical")

    def node_deg(self, nd):
        d = self._deg_cache.get(nd)
        if d is None:
            d = self._deg_cache[nd] = degree(nd, self.labels)
        return d

    def _emin(self, lab, p):
        ed = self.edge_deg(lab, p)
        return (ed[0] + self._mins[lab][0], ed[1] + self._mins[lab][1])

    def _types_for(self, label):
        return sorted(self.rule.root_types() if label is None else self.rule.types[label])

    def _gen_impl(self, label, budget):
        """All nodes admissible above `label` (root if None) with degree <= budget at both ends."""
        out = []
        for typ in self._types_for(label):
            base = [0, 0]
            for lab, p in typ:
                e = self._emin(lab, p)
                base = [base[0] + e[0], base[1] + e[1]]
            if base[0] > budget[0] or base[1] > budget[1]:
                continue
            allow_poly = self.poly_policy == "full" or any(self.labels[lab].is_noise for lab, _ in typ)
            self._fill(typ, 0, budget, [], None, allow_poly, out)
        return tuple(out)

    def _fill(self, typ, idx, budget, chosen, prev, allow_poly, out):
        if idx == len(typ):
            slack = min(budget)
            polys = _multi_indices(int(slack)) if (allow_poly and slack >= 0) else [ZERO]
            for k in polys:
                if sdeg(k) <= slack:
                    out.append(node(chosen, k))
                    self._count += 1
                    if self._count > self.max_trees:
                        raise DivergenceError(f"tree budget {self.max_trees} exceeded; rule may not be subcritical")
            return
        lab, p = typ[idx]
        rest = [0, 0]
        for l2, p2 in typ[idx + 1:]:
            e = self._emin(l2, p2)
            rest = [rest[0] + e[0], rest[1] + e[1]]
        ed = self.edge_deg(lab, p)
        cb = (budget[0] - ed[0] - rest[0], budget[1] - ed[1] - rest[1])
        if self.labels[lab].is_noise:
            cands = (ONE,) if cb[0] >= 0 and cb[1] >= 0 else ()
        else:
            cands = self._gen(lab, cb)
        same = idx > 0 and typ[idx - 1] == typ[idx]
        for ci, c in enumerate(cands):
            if same and ci < prev:
                continue
            cd = self._at(self.node_deg(c))
            if cd[0] > cb[0] or cd[1] > cb[1]:
                continue
            nb = (budget[0] - ed[0] - cd[0], budget[1] - ed[1] - cd[1])
            self._fill(typ, idx + 1, nb, chosen + [(lab, p, c)], ci, allow_poly, out)

    def run(self, bound: Deg, label=None):
        bnd = self._at(bound)
        nodes = set(self._gen(label, bnd))
        keep = [nd for nd in nodes if self.node_deg(nd).below(bound, self.ends)]
        return sorted(keep, key=lambda nd: (self._at(self.node_deg(nd)), nd))


def decorate(nd, labels):
    return DecoratedTree(nd, degree(nd, labels), symmetry_factor(nd), render_form(nd, labels))


def enumerate_trees(rule, deg_bound=Deg.of(0), kappa_interval=None, poly_policy="noise", max_trees=200_000):
    """All isomorphism classes in T(R) with degree < deg_bound for every kappa in the interval."""
    if not isinstance(deg_bound, Deg):
        deg_bound = Deg.parse(str(deg_bound))
    en = Enumerator(rule, kappa_interval, poly_policy, max_trees)
    return [decorate(nd, rule.labels) for nd in en.run(deg_bound)]


def negative_trees(rule, kappa_interval=None, poly_policy="noise"):
    """T_-(R): negative trees that are not planted and carry no polynomial at the root."""
    return [
        t
        for t in enumerate_trees(rule, Deg.of(0), kappa_interval, poly_policy)
        if not is_planted(t.node) and t.node[0] == ZERO and t.node[1]
    ]


def _contractions(nd):
    """Yield (S_edges, merged_type) for connected edge sets S hanging from the root of nd."""
    edges = list(nd[1])

    def options(e):
        lab, p, c = e
        # either the edge is outside S, or it is inside together with a sub-choice below it
        yield ("out", e)
        for inner, hanging in _sub(c):
            yield ("in", (e, inner, hanging))

    def _sub(n):
        kids = list(n[1])
        for combo in itertools.product(*[list(options(e)) for e in kids]):
            inner, hanging = [], []
            for kind, val in combo:
                if kind == "out":
                    hanging.append((val[0], val[1]))
                else:
                    e, inn, hang = val
                    inner.append((e, inn))
                    hanging.extend(hang)
            yield inner, hanging

    for inner, hanging in _sub(nd):
        if inner:
            yield inner, tuple(sorted(hanging))


def _sub_degree(inner, labels, poly):
    d = Deg.of(sdeg(poly))
    for (lab, p, c), inn in inner:
        d = d + labels.deg(lab) - sdeg(p) + _sub_degree(inn, labels, c[0])
    return d


def complete_rule(rule: Rule, audit_bound=Deg.of(0), max_rounds=5, poly_policy="noise"):
    """Normal extension, then closure under contraction of negative subtrees.

    Every tree below `audit_bound` is scanned; for each connected negative edge set S
    hanging from a vertex v, the node type obtained by collapsing S into v must be
    admissible for the edge entering v. Missing types are added (and recorded in
    `extra`) until the scan is stable.
    """
    cur = rule.normal_extension()
    labels = rule.labels
    ends = labels.kappa_interval
    for _ in range(max_rounds):
        added = {}
        for t in enumerate_trees(cur, audit_bound, poly_policy=poly_policy):
            stack = [(t.node, None)]
            while stack:
                nd, lab_in = stack.pop()
                for lab, p, c in nd[1]:
                    stack.append((c, lab))
                for inner, merged in _contractions(nd):
                    if not _sub_degree(inner, labels, nd[0]).below(Deg.of(0), ends):
                        continue
                    allowed = cur.root_types() if lab_in is None else cur.types[lab_in]
                    if merged not in allowed and lab_in is not None:
                        added.setdefault(lab_in, set()).add(merged)
        if not added:
            return cur
        for lab, ts in added.items():
            for typ in ts:
                cur.types[lab] |= sub_multisets(typ)
                cur.extra.setdefault(lab, set()).add(typ)
    raise DivergenceError("rule completion did not stabilise")
