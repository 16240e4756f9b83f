"""Decorated rooted trees in canonical nested-tuple form.

A node is ``(poly, edges)`` where ``poly`` is a multi-index in N^3 (time, x1, x2)
and ``edges`` is a sorted tuple of ``(label, deriv, child_node)``. Sorting the
edges recursively makes the tuple itself a canonical representative of the
isomorphism class, so equality of tuples is tree isomorphism.
"""
from __future__ import annotations

import hashlib
import itertools
from collections import Counter
from dataclasses import dataclass
from math import factorial

from .labels import ZERO, Deg, sdeg, e_

ONE = (ZERO, ())


def node(edges=(), poly=ZERO):
    return (tuple(poly), tuple(sorted(edges)))


def edge(label, child=ONE, deriv=ZERO):
    if isinstance(deriv, int):
        deriv = e_(deriv) if deriv else ZERO
    return (label, tuple(deriv), child)


def X(*dirs):
    """Multi-index with one unit per listed direction (0 = time)."""
    k = [0, 0, 0]
    for d in dirs:
        k[d] += 1
    return tuple(k)


def planted(label, child=ONE, deriv=ZERO):
    return node([edge(label, child, deriv)])


def n_edges(nd):
    return sum(1 + n_edges(c) for _, _, c in nd[1])


def n_vertices(nd):
    return 1 + n_edges(nd)


def node_type(nd):
    """Multiset of (label, deriv) leaving the node, as a sorted tuple."""
    return tuple(sorted((lab, p) for lab, p, _ in nd[1]))


def degree(nd, labels):
    d = Deg.of(sdeg(nd[0]))
    for lab, p, c in nd[1]:
        d = d + labels.deg(lab) - sdeg(p) + degree(c, labels)
    return d


def noise_leaves(nd, labels):
    """Noise labels in depth-first canonical order."""
    out = []
    for lab, p, c in nd[1]:
        if labels[lab].is_noise:
            out.append(lab)
        else:
            out.extend(noise_leaves(c, labels))
    return out


def is_planted(nd):
    return nd[0] == ZERO and len(nd[1]) == 1


def symmetry_factor(nd):
    """S = k! prod_j S(tau_j)^beta_j beta_j! over distinct (edge, subtree) pairs."""
    s = 1
    for k in nd[0]:
        s *= factorial(k)
    for (lab, p, c), beta in Counter(nd[1]).items():
        s *= symmetry_factor(c) ** beta * factorial(beta)
    return s


# explicit graph form, used by the brute-force oracles
def to_graph(nd):
    """Return (parent, edge_dec, node_poly) lists; vertex 0 is the root."""
    parent, dec, poly = [None], [None], [nd[0]]

    def walk(n, v):
        for lab, p, c in n[1]:
            w = len(parent)
            parent.append(v)
            dec.append((lab, p))
            poly.append(c[0])
            walk(c, w)

    walk(nd, 0)
    return parent, dec, poly


def from_graph(parent, dec, poly):
    children = {v: [] for v in range(len(parent))}
    for v, u in enumerate(parent):
        if u is not None:
            children[u].append(v)

    def build(v):
        return node([edge(dec[w][0], build(w), dec[w][1]) for w in children[v]], poly[v])

    return build(0)


def automorphism_count(nd):
    """Decorated automorphisms by brute force over vertex permutations fixing the root."""
    parent, dec, poly = to_graph(nd)
    n = len(parent)
    count = 0
    for perm in itertools.permutations(range(1, n)):
        sigma = (0,) + perm
        ok = True
        for v in range(1, n):
            w = sigma[v]
            if sigma[parent[v]] != parent[w] or dec[v] != dec[w] or poly[v] != poly[w]:
                ok = False
                break
        if ok:
            count += 1
    return count


def brute_symmetry_factor(nd):
    """|Aut| times prod_v n(v)!, the group order with polynomial decorations unfolded."""
    parent, dec, poly = to_graph(nd)
    s = automorphism_count(nd)
    for k in poly:
        for ki in k:
            s *= factorial(ki)
    return s


def shuffled_graph(nd, rng):
    """Random relabelling of vertices and child order of an isomorphic copy."""
    parent, dec, poly = to_graph(nd)
    n = len(parent)
    perm = [0] + [int(v) for v in rng.permutation(range(1, n))]
    inv = {old: new for new, old in enumerate(perm)}
    new_parent = [None] * n
    new_dec = [None] * n
    new_poly = [None] * n
    for old in range(n):
        new = inv[old]
        new_parent[new] = None if parent[old] is None else inv[parent[old]]
        new_dec[new] = dec[old]
        new_poly[new] = poly[old]
    return new_parent, new_dec, new_poly


def isomorphic_bruteforce(n1, n2):
    """Explicit isomorphism search between two trees (small trees only)."""
    p1, d1, q1 = to_graph(n1)
    p2, d2, q2 = to_graph(n2)
    if len(p1) != len(p2) or q1[0] != q2[0]:
        return False
    n = len(p1)
    for perm in itertools.permutations(range(1, n)):
        sigma = (0,) + perm
        if all(
            sigma[p1[v]] == p2[sigma[v]] and d1[v] == d2[sigma[v]] and q1[v] == q2[sigma[v]] for v in range(1, n)
        ):
            return True
    return False


def tree_hash(nd):
    return hashlib.sha1(repr(nd).encode()).hexdigest()[:16]


# rendering
SYM_GLYPHS = {"a": "I", "l": "Ξ"}
GAUGE_GLYPHS = {"a": "I", "m": "Ib", "h": "H", "u": "U", "l": "Ξ", "lb": "Ξb"}


def _poly_prefix(k):
    s = sdeg(k)
    if s == 0:
        return ""
    return "X" if s == 1 else f"X^{s}"


def render_form(nd, labels, glyphs=None):
    """Index-free form: I for kernels, I' for a spatially differentiated kernel, Ξ for noise."""
    glyphs = glyphs or (GAUGE_GLYPHS if "lb1" in labels.labels else SYM_GLYPHS)
    parts = []
    for lab, p, c in nd[1]:
        L = labels[lab]
        g = glyphs[L.family]
        mark = "'" * sdeg(p) if p[0] == 0 else "∂t"
        if L.is_noise:
            parts.append((sdeg(p) > 0, g + mark))
        else:
            parts.append((sdeg(p) > 0, f"{g}{mark}({render_form(c, labels, glyphs) or '1'})"))
    parts.sort()
    return _poly_prefix(nd[0]) + "".join(s for _, s in parts)


def render_full(nd):
    """Indexed rendering with every label and decoration."""
    parts = []
    for lab, p, c in nd[1]:
        d = "" if p == ZERO else "_d" + "".join(str(i) for i in range(3) for _ in range(p[i]))
        inner = "" if c == ONE else render_full(c)
        parts.append(f"{lab}{d}" + (f"[{inner}]" if inner else ""))
    k = nd[0]
    pre = "" if k == ZERO else "X" + "".join(str(i) for i in range(3) for _ in range(k[i]))
    return pre + "·".join(parts) if parts else (pre or "1")


@dataclass(frozen=True)
class DecoratedTree:
    """An enumerated tree with its cached invariants."""

    node: tuple
    degree: Deg
    symmetry: int
    form: str

    @property
    def hash(self):
        return tree_hash(self.node)

    @property
    def n_edges(self):
        return n_edges(self.node)

    def vertices(self):
        return to_graph(self.node)

    def to_json(self):
        return {
            "hash": self.hash,
            "form": self.form,
            "tree": render_full(self.node),
            "degree": str(self.degree),
            "symmetry_factor": self.symmetry,
        }
