"""Rules: for each label, the admissible node types directly above an edge of that label."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .labels import ZERO, e_, sym_labels, gauge_labels


class RuleError(ValueError):
    pass


def ntype(*items):
    """Node type from (label, deriv) pairs or bare labels; deriv may be a spatial direction."""
    out = []
    for it in items:
        if isinstance(it, str):
            out.append((it, ZERO))
        else:
            lab, d = it
            out.append((lab, e_(d) if isinstance(d, int) else tuple(d)))
    return tuple(sorted(out))


def sub_multisets(t):
    out = set()
    for r in range(len(t) + 1):
        for c in itertools.combinations(t, r):
            out.add(tuple(sorted(c)))
    return out


@dataclass
class Rule:
    name: str
    labels: object
    types: dict  # label name -> set of node types
    extra: dict = field(default_factory=dict)  # types added by completion, for audit

    def __post_init__(self):
        for lab in self.labels.noises():
            t = self.types.setdefault(lab.name, {()})
            if t != {()}:
                raise RuleError(f"noise label {lab.name} must be terminal")

    def allows(self, label, typ):
        return typ in self.types[label]

    def root_types(self):
        out = set()
        for lab in self.labels.kernels():
            out |= self.types[lab.name]
        return out

    def normal_extension(self):
        types = {k: set().union(*(sub_multisets(t) for t in v)) for k, v in self.types.items()}
        return Rule(self.name, self.labels, types, dict(self.extra))

    def conforms(self, nd, label=None):
        """Strong conformance of the tree (root type in the union when label is None)."""
        typ = tuple(sorted((lab, p) for lab, p, _ in nd[1]))
        if label is None:
            if typ not in self.root_types():
                return False
        elif not self.allows(label, typ):
            return False
        return all(self.conforms(c, lab) for lab, _, c in nd[1])


def sym_rule(d=2):
    labels = sym_labels(d)
    types = {}
    dims = range(1, d + 1)
    for i in dims:
        ts = {ntype(f"l{i}")}
        for j in dims:
            ts.add(ntype(f"a{i}", f"a{j}", f"a{j}"))
            ts.add(ntype(f"a{j}", (f"a{j}", i)))
            ts.add(ntype(f"a{j}", (f"a{i}", j)))
        types[f"a{i}"] = ts
    return Rule("sym", labels, types)


def gauge_rule(d=2):
    labels = gauge_labels(d)
    dims = range(1, d + 1)
    Q = ("a", "m")
    types = {}
    for i in dims:
        types[f"m{i}"] = {ntype("u", f"l{i}")}
    types["u"] = set()
    for j in dims:
        types["u"].add(ntype("u", f"h{j}", f"h{j}"))
        for q in Q:
            types["u"].add(ntype("u", f"{q}{j}", f"h{j}"))
    for i in dims:
        ts = set()
        for j in dims:
            ts.add(ntype(f"h{j}", (f"h{i}", j)))
            for q in Q:
                ts.add(ntype(f"{q}{j}", f"h{j}", f"h{i}"))
                ts.add(ntype(f"h{j}", (f"{q}{j}", i)))
                ts.add(ntype(f"{q}{j}", (f"h{j}", i)))
        types[f"h{i}"] = ts
    for i in dims:
        ts = {ntype(f"h{i}"), ntype("u", f"l{i}"), ntype("u", f"lb{i}")}
        for q in Q:
            ts.add(ntype(f"{q}{i}"))
            for j in dims:
                for qh in Q:
                    ts.add(ntype(f"{q}{j}", (f"{qh}{j}", i)))
                    ts.add(ntype(f"{q}{j}", (f"{qh}{i}", j)))
                    for qt in Q:
                        ts.add(ntype(f"{q}{i}", f"{qh}{j}", f"{qt}{j}"))
        types[f"a{i}"] = ts
    return Rule("gauge", labels, types)


def get_rule(name):
    if name == "sym":
        return sym_rule()
    if name == "gauge":
        return gauge_rule()
    raise ValueError(f"unknown rule {name!r}; expected sym or gauge")
