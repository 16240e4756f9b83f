"""Nonlinearities F_t as jet polynomials: the Yang-Mills drift and the gauge-transformed systems."""
from __future__ import annotations

from fractions import Fraction

from .jet import JetTerm, V, app, ad, br, comp
from .labels import e_


def sym_nonlinearity(d=2):
    """F_{a_i} = xi_i + sum_j [A_j, 2 d_j A_i - d_i A_j + [A_j, A_i]]."""
    F = {}
    dims = range(1, d + 1)
    for i in dims:
        f = V(f"l{i}")
        for j in dims:
            Aj, Ai = V(f"a{j}"), V(f"a{i}")
            f = f + br(Aj, V(f"a{i}", e_(j)) * 2 - V(f"a{j}", e_(i)) + br(Aj, Ai))
        F[f"a{i}"] = f
    return F


def _gauge(barred, c1=0, c2=0, d=2):
    dims = range(1, d + 1)
    c1, c2 = Fraction(c1), Fraction(c2)

    def A(i, p=None):
        p = p or (0, 0, 0)
        if barred:
            return V(f"a{i}", p) + V(f"m{i}", p)
        return V(f"a{i}", p)

    def dA(i, j):
        return A(i, e_(j))

    h = {i: V(f"h{i}") for i in dims}
    U = V("u")
    F = {}
    for i in dims:
        f = JetTerm()
        for j in dims:
            f = f + br(A(j), dA(i, j) * 2 - dA(j, i) + br(A(j), A(i)))
        f = f + A(i) * c1 + h[i] * c2
        if not barred:
            f = f + app(U, V(f"lb{i}"))
        F[f"a{i}"] = f
        F[f"m{i}"] = app(U, V(f"l{i}")) if barred else JetTerm()
        g = JetTerm()
        for j in dims:
            g = g - br(h[j], V(f"h{i}", e_(j)))
            g = g + br(br(A(j), h[j]), h[i])
            # d_i [A_j, h_j] expanded by Leibniz
            g = g + br(dA(j, i), h[j]) + br(A(j), V(f"h{j}", e_(i)))
        F[f"h{i}"] = g
    fu = JetTerm()
    for j in dims:
        fu = fu - comp(ad(h[j]), comp(ad(h[j]), U))
        fu = fu + comp(ad(br(A(j), h[j])), U)
    F["u"] = fu
    return F


def gauge_nonlinearity(system="B", c1=0, c2=0, d=2):
    """system 'B' (noise chi*xi under U in the a-equation) or 'Abar' (U xi in the m-equation)."""
    if system not in ("B", "Abar"):
        raise ValueError("system must be 'B' or 'Abar'")
    return _gauge(system == "Abar", c1, c2, d)
