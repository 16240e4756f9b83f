"""Symbolic polynomials over jet symbols with Lie-bracket and composition monomials.

Monomials are nested tuples:

    ('v', name, p)       jet component A_(name, p); an operator when name == 'u'
    ('s', sid, kind)     placeholder slot (kind 'vec' or 'op')
    ('psi', j)           noise placeholder for leaf j
    ('br', x, y)         [x, y]
    ('ad', x)            [x, .] as an operator
    ('comp', L, M)       L o M
    ('app', L, x)        L x

Every monomial is multilinear in its leaves, so D_o (replace one occurrence of a
variable by a slot) and the total derivative d_r (shift one occurrence) are
exact Leibniz sums.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .labels import ZERO

OPERATOR_NAMES = {"u"}


def kind(e):
    tag = e[0]
    if tag == "v":
        return "op" if e[1] in OPERATOR_NAMES else "vec"
    if tag == "s":
        return e[2]
    if tag in ("psi", "br", "app"):
        return "vec"
    return "op"


class JetTerm:
    """Finite linear combination of monomials with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for e, c in (terms.items() if isinstance(terms, dict) else terms):
                self._add(e, c)

    def _add(self, e, c):
        c = self.terms.get(e, 0) + c
        if c == 0:
            self.terms.pop(e, None)
        else:
            self.terms[e] = c

    @staticmethod
    def mono(e, c=1):
        return JetTerm({e: Fraction(c)})

    def __add__(self, other):
        out = JetTerm(self.terms)
        for e, c in other.terms.items():
            out._add(e, c)
        return out

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, s):
        s = Fraction(s)
        if s == 0:
            return JetTerm()
        return JetTerm({e: c * s for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{show(e)}" for e, c in self.terms.items())

    def map_monomials(self, fn):
        """Apply a linear map monomial -> JetTerm."""
        out = JetTerm()
        for e, c in self.terms.items():
            for e2, c2 in fn(e).terms.items():
                out._add(e2, c * c2)
        return out


def _binary(tag, x, y):
    out = JetTerm()
    for ex, cx in x.terms.items():
        for ey, cy in y.terms.items():
            out._add((tag, ex, ey), cx * cy)
    return out


def V(name, p=ZERO):
    return JetTerm.mono(("v", name, tuple(p)))


def slot(sid, k="vec"):
    return JetTerm.mono(("s", sid, k))


def psi(j):
    return JetTerm.mono(("psi", j))


def br(x, y):
    return _binary("br", x, y)


def comp(L, M):
    return _binary("comp", L, M)


def app(L, x):
    return _binary("app", L, x)


def ad(x):
    return JetTerm({("ad", e): c for e, c in x.terms.items()})


def _rebuild(e, i, new):
    return e[:i] + (new,) + e[i + 1:]


def _child_positions(e):
    tag = e[0]
    if tag in ("br", "comp", "app"):
        return (1, 2)
    if tag == "ad":
        return (1,)
    return ()


def _replace_each(e, match, repl):
    """All monomials obtained by replacing one occurrence of a matching leaf."""
    if e[0] in ("v", "s", "psi"):
        r = repl(e) if match(e) else None
        return [r] if r is not None else []
    out = []
    for i in _child_positions(e):
        for new in _replace_each(e[i], match, repl):
            out.append(_rebuild(e, i, new))
    return out


def D(term, o, sid):
    """Directional derivative in the jet component o = (name, p), direction placed in slot sid."""
    name, p = o[0], tuple(o[1])
    k = "op" if name in OPERATOR_NAMES else "vec"
    s = ("s", sid, k)

    def fn(e):
        return JetTerm((m, 1) for m in _replace_each(e, lambda x: x[0] == "v" and x[1] == name and x[2] == p, lambda x: s))

    return term.map_monomials(fn)


def partial(term, r):
    """Total derivative in direction r (0 = time): shifts one jet index at a time."""

    def shift(x):
        q = list(x[2])
        q[r] += 1
        return ("v", x[1], tuple(q))

    def fn(e):
        return JetTerm((m, 1) for m in _replace_each(e, lambda x: x[0] == "v", shift))

    return term.map_monomials(fn)


def partial_k(term, k):
    for r, n in enumerate(k):
        for _ in range(n):
            term = partial(term, r)
    return term


def _subst_mono(e, sid, value):
    tag = e[0]
    if tag == "s":
        return value if e[1] == sid else JetTerm.mono(e)
    if tag in ("v", "psi"):
        return JetTerm.mono(e)
    if tag == "ad":
        return ad(_subst_mono(e[1], sid, value))
    a = _subst_mono(e[1], sid, value)
    b = _subst_mono(e[2], sid, value)
    return _binary(tag, a, b)


def substitute(term, sid, value):
    return term.map_monomials(lambda e: _subst_mono(e, sid, value))


def leaves(e):
    if e[0] in ("v", "s", "psi"):
        return [e]
    out = []
    for i in _child_positions(e):
        out.extend(leaves(e[i]))
    return out


def show(e):
    tag = e[0]
    if tag == "v":
        p = e[2]
        d = "" if p == ZERO else "d" + "".join(str(i) for i in range(3) for _ in range(p[i]))
        return f"{d}{e[1]}"
    if tag == "s":
        return f"<{e[1]}>"
    if tag == "psi":
        return f"Ψ{e[1]}"
    if tag == "br":
        return f"[{show(e[1])},{show(e[2])}]"
    if tag == "ad":
        return f"ad({show(e[1])})"
    if tag == "comp":
        return f"{show(e[1])}∘{show(e[2])}"
    return f"{show(e[1])}({show(e[2])})"


class Evaluator:
    """Numerical evaluation of monomials at concrete jet values (memoised per instance)."""

    def __init__(self, alg, jet, psis=None, slots=None):
        self.alg = alg
        self.jet = jet  # callable or dict: (name, p) -> ndarray
        self.psis = psis or {}
        self.slots = slots or {}
        self._cache = {}

    def var(self, name, p):
        if callable(self.jet):
            return self.jet(name, p)
        return self.jet[(name, p)]

    def mono(self, e):
        v = self._cache.get(e)
        if v is not None:
            return v
        tag = e[0]
        if tag == "v":
            v = self.var(e[1], e[2])
        elif tag == "psi":
            v = self.psis[e[1]]
        elif tag == "s":
            v = self.slots[e[1]]
        elif tag == "br":
            v = self.alg.bracket(self.mono(e[1]), self.mono(e[2]))
        elif tag == "ad":
            v = self.alg.ad(self.mono(e[1]))
        elif tag == "comp":
            v = self.mono(e[1]) @ self.mono(e[2])
        else:
            v = self.mono(e[1]) @ self.mono(e[2])
        self._cache[e] = v
        return v

    def __call__(self, term):
        out = None
        for e, c in term.terms.items():
            v = float(c) * self.mono(e)
            out = v if out is None else out + v
        if out is None:
            return np.zeros(self.alg.dim)
        return out
