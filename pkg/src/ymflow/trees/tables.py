"""Reference tree tables and colour-assignment templates used by the checks."""
from __future__ import annotations

import itertools

from .tree import X, edge, node, planted

# negative-degree trees of the Yang-Mills rule, by index-free form
SYM_TABLE = {
    "-2-1*k": {"Ξ"},
    "-1-2*k": {"I(Ξ)I'(Ξ)"},
    "-1-1*k": {"XΞ", "I'(Ξ)"},
    "0-3*k": {"I(Ξ)I(Ξ)I(Ξ)", "I(Ξ)I'(I(Ξ)I'(Ξ))", "I(I(Ξ)I'(Ξ))I'(Ξ)"},
    "0-2*k": {
        "I'(I(Ξ)I'(Ξ))",
        "I(I'(Ξ))I'(Ξ)",
        "I(Ξ)I'(I'(Ξ))",
        "I(Ξ)I(Ξ)",
        "I(Ξ)I'(XΞ)",
        "I(XΞ)I'(Ξ)",
    },
    "0-1*k": {"I(Ξ)", "I'(XΞ)", "I'(I'(Ξ))", "X^2Ξ"},
}

SYM_NEGATIVE_FORMS = {
    "I(Ξ)I'(Ξ)",
    "I(Ξ)I(Ξ)I(Ξ)",
    "I(Ξ)I'(I(Ξ)I'(Ξ))",
    "I(I(Ξ)I'(Ξ))I'(Ξ)",
    "I(I'(Ξ))I'(Ξ)",
    "I(Ξ)I'(I'(Ξ))",
    "I(Ξ)I(Ξ)",
    "I(Ξ)I'(XΞ)",
    "I(XΞ)I'(Ξ)",
}


def _rows(K, N):
    """Concrete trees of one gauge table as functions of colours (g, r, o).

    K is the label family of the kernels sitting directly on noises, N the noise family.
    """

    def k(g):
        return f"{K}{g}"

    def n(g):
        return f"{N}{g}"

    def Psi(g, r=0):
        return edge(k(g), planted(n(g)), r)

    return {
        "cherry": lambda g, r, o: node([Psi(g), Psi(g)]),
        "outer-deriv": lambda g, r, o: node([Psi(g), edge(f"a{o}", node([Psi(g, r)]), r)]),
        "inner-deriv": lambda g, r, o: node([Psi(g, r), edge(f"a{o}", node([Psi(g, r)]))]),
        "X-on-deriv": lambda g, r, o: node([Psi(g), edge(k(g), node([edge(n(g))], X(r)), r)]),
        "X-on-plain": lambda g, r, o: node([edge(k(g), node([edge(n(g))], X(r))), Psi(g, r)]),
        "u-tree": lambda g, r, o: node([edge("u", node([Psi(g)])), edge(n(g))]),
        "h-plain": lambda g, r, o: node([Psi(g, g), edge(f"h{g}", node([Psi(g, g)]))]),
        "h-deriv": lambda g, r, o: node([Psi(g), edge(f"h{g}", node([Psi(g, g)]), g)]),
    }


def gauge_table(system):
    """Row name -> (form, colour template) for the B system or the barred system."""
    K, N = ("a", "lb") if system == "B" else ("m", "l")
    rows = _rows(K, N)
    kk = "I" if K == "a" else "Ib"
    nn = "Ξb" if N == "lb" else "Ξ"
    forms = {
        "cherry": f"{kk}({nn}){kk}({nn})",
        "outer-deriv": f"{kk}({nn})I'({kk}'({nn}))",
        "inner-deriv": f"I({kk}'({nn})){kk}'({nn})",
        "X-on-deriv": f"{kk}({nn}){kk}'(X{nn})",
        "X-on-plain": f"{kk}(X{nn}){kk}'({nn})",
        "u-tree": f"U({kk}({nn})){nn}",
        "h-plain": f"H({kk}'({nn})){kk}'({nn})",
        "h-deriv": f"{kk}({nn})H'({kk}'({nn}))",
    }
    return {name: (forms[name], rows[name]) for name in forms}


def colour_instances(template, rule, d=2):
    """All distinct conforming trees obtained by assigning colours in {1..d}."""
    out = set()
    for g, r, o in itertools.product(range(1, d + 1), repeat=3):
        nd = template(g, r, o)
        if rule.conforms(nd):
            out.add(nd)
    return out
