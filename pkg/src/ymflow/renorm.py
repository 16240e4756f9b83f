"""Truncated heat kernel and the renormalisation constants built from it.

All constants are space-time integrals of products of K, K^eps = K * chi^eps
and chi^eps. They are evaluated in Fourier variables (w, k), where every
convolution is a product. The kernel transform is split as

    K^(w, k) = sum_{m<=n} mu^m / (mu + k^2 + i w)^(m+1) + D^(w, k)

The first part is the exact transform of G(t,x) e^{-mu t} sum_m (mu t)^m/m!,
which carries the whole small-scale singularity; the remainder D vanishes to
order t^(n+1) at the origin, so its transform is computed by ordinary
quadrature and is negligible at high frequency.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from math import comb, factorial, log, pi

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import j0

from .mollifier import MollifierSpec


class UnderResolved(ValueError):
    pass


def smoothstep(order):
    """Generalised smoothstep polynomial S_order on [0, 1] (C^order at both ends)."""
    n = order
    coef = np.zeros(2 * n + 2)
    for j in range(n + 1):
        coef[n + 1 + j] = comb(n + j, j) * comb(2 * n + 1, n - j) * (-1) ** j
    return Polynomial(coef)


@dataclass(frozen=True)
class KernelSpec:
    """Truncation of the heat kernel G(t,x) = exp(-|x|^2/4t)/(4 pi t).

    K = G * psi(N) with the smooth parabolic gauge N = (t^2 + |x|^4)^(1/4).
    psi = 1 for N <= inner and 0 for N >= outer; since N <= |z|_s <= 8^(1/4) N,
    K = G on |z|_s <= 1/2 and K = 0 on |z|_s > 1.
    """

    inner: float = 0.5
    outer: float = 0.59
    order: int = 5
    mu: float = 40.0
    n_sub: int = 4
    t_star: float = 1.0 / 400

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("cutoff profile must be at least C^2 for Q to be continuous")
        if self.inner < 0.5 or self.outer > 8 ** -0.25 or self.outer <= self.inner:
            raise ValueError("cutoff window must sit inside [1/2, 8^(-1/4)]")

    def fingerprint(self):
        return f"smoothstep{self.order}-N[{self.inner:g},{self.outer:g}]"

    # cutoff as a function of u = N^4
    def _psi_derivs(self, n):
        s = smoothstep(self.order)
        w = self.outer - self.inner
        x = np.clip((n - self.inner) / w, 0.0, 1.0)
        inside = (n > self.inner) & (n < self.outer)
        p0 = 1 - s(x)
        p1 = np.where(inside, -s.deriv(1)(x) / w, 0.0)
        p2 = np.where(inside, -s.deriv(2)(x) / w**2, 0.0)
        return p0, p1, p2

    def _f_derivs(self, t, r):
        u = t * t + r**4
        n = u**0.25
        p0, p1, p2 = self._psi_derivs(n)
        with np.errstate(divide="ignore", invalid="ignore"):
            dn = np.where(n > 0, 0.25 / n**3, 0.0)
            ddn = np.where(n > 0, -3.0 / 16 / n**7, 0.0)
        f1 = p1 * dn
        f2 = p2 * dn * dn + p1 * ddn
        return p0, f1, f2

    def K(self, t, x1, x2=0.0):
        t = np.asarray(t, float)
        r2 = np.asarray(x1, float) ** 2 + np.asarray(x2, float) ** 2
        tt = np.where(t > 0, t, 1.0)
        g = np.where(t > 0, np.exp(-r2 / (4 * tt)) / (4 * pi * tt), 0.0)
        p0, _, _ = self._f_derivs(np.where(t > 0, t, 0.0), np.sqrt(r2))
        return g * p0

    def dK(self, j, t, x1, x2=0.0):
        """Spatial derivative d_j K."""
        t = np.asarray(t, float)
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        r2 = x1**2 + x2**2
        tt = np.where(t > 0, t, 1.0)
        g = np.where(t > 0, np.exp(-r2 / (4 * tt)) / (4 * pi * tt), 0.0)
        p0, f1, _ = self._f_derivs(np.where(t > 0, t, 0.0), np.sqrt(r2))
        xj = x1 if j == 1 else x2
        return g * (-xj / (2 * tt) * p0 + 4 * r2 * xj * f1)

    def Q(self, t, r):
        """(d_t - Laplacian) K away from the origin, as a function of (t, |x|)."""
        t = np.asarray(t, float)
        r = np.asarray(r, float)
        tt = np.where(t > 0, t, 1.0)
        g = np.where(t > 0, np.exp(-r * r / (4 * tt)) / (4 * pi * tt), 0.0)
        _, f1, f2 = self._f_derivs(np.where(t > 0, t, 0.0), r)
        return g * (2 * tt * f1 - 16 * r**6 * f2 - 16 * r**2 * f1 + 4 * r**4 * f1 / tt)

    @property
    def t_max(self):
        return self.outer**2


def build_kernel(**kw):
    return KernelSpec(**kw)


def gauss_legendre_panels(edges, npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    a = np.asarray(edges[:-1])[:, None]
    b = np.asarray(edges[1:])[:, None]
    nodes = (a + b) / 2 + (b - a) / 2 * x[None, :]
    weights = (b - a) / 2 * w[None, :]
    return nodes.ravel(), weights.ravel()


def _frequency_edges(top):
    edges = [0.0, 0.25, 0.5]
    while edges[-1] < top:
        edges.append(edges[-1] * np.sqrt(2.0))
    return np.array(edges)


class _Transforms:
    """Tabulated transforms of the kernel remainder D and of Q on frequency nodes."""

    def __init__(self, kernel: KernelSpec, npts: int):
        self.kernel = kernel
        self.npts = npts
        self.w_cap = 2000.0
        self.k_cap = 400.0
        wn, ww = gauss_legendre_panels(_frequency_edges(self.w_cap)[:-1], npts)
        kn, kw = gauss_legendre_panels(_frequency_edges(self.k_cap)[:-1], npts)
        self.w_nodes, self.k_nodes = wn, kn
        self._tables()

    def _tables(self):
        ks = self.kernel
        # radial grid on the support of K(t, .) for t >= t_star
        rn, rw = gauss_legendre_panels(np.linspace(0, ks.outer, 61), 10)
        bess = j0(np.outer(rn, self.k_nodes)) * (2 * pi * rn * rw)[:, None]
        # time grid: graded near 0, uniform afterwards
        fine = np.geomspace(1e-7, 2e-3, 30)
        edges = np.concatenate([[0.0], fine, np.linspace(2e-3, 1.2, 600)[1:]])
        tn, tw = gauss_legendre_panels(edges, 8)
        k2 = self.k_nodes**2
        mu, n = ks.mu, ks.n_sub
        poisson = np.exp(-mu * tn) * sum((mu * tn) ** m / factorial(m) for m in range(n + 1))
        heat = np.exp(-np.outer(tn, k2))
        ktilde = heat.copy()
        mid = (tn >= ks.t_star) & (tn <= ks.t_max)
        T, R = np.meshgrid(tn[mid], rn, indexing="ij")
        ktilde[mid] = ks.K(T, R) @ bess
        ktilde[tn > ks.t_max] = 0.0
        dtilde = ktilde - heat * poisson[:, None]
        qtilde = np.zeros_like(heat)
        qtilde[mid] = ks.Q(T, R) @ bess
        phase = np.exp(-1j * np.outer(self.w_nodes, tn)) * tw[None, :]
        self.D = phase @ dtilde
        self.Qh = phase @ qtilde

    def lookup(self, table, w, k):
        """Table values on (w, k) product nodes; zero beyond the caps."""
        out = np.zeros((len(w), len(k)), dtype=complex)
        iw = np.searchsorted(self.w_nodes, w)
        ik = np.searchsorted(self.k_nodes, k)
        okw = (iw < len(self.w_nodes)) & (self.w_nodes[np.minimum(iw, len(self.w_nodes) - 1)] == w)
        okk = (ik < len(self.k_nodes)) & (self.k_nodes[np.minimum(ik, len(self.k_nodes) - 1)] == k)
        out[np.ix_(okw, okk)] = table[np.ix_(iw[okw], ik[okk])]
        return out


@lru_cache(maxsize=8)
def _transforms(kernel, npts):
    return _Transforms(kernel, npts)


@dataclass
class RenormConstants:
    eps: float
    cbar_eps: float
    chat_eps: float
    csym_eps: float
    ctilde_eps: float
    ctilde0_eps: float
    lam: float | None = None
    errors: dict = field(default_factory=dict)
    mollifier: str = ""
    kernel: str = ""

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


class ConstantsEvaluator:
    """Evaluates every constant for one (eps, mollifier, kernel) on a shared grid."""

    def __init__(self, eps, moll=None, kernel=None, npts=16):
        if not (0 < eps <= 1):
            raise ValueError("eps must lie in (0, 1]")
        self.eps = eps
        self.moll = moll or MollifierSpec()
        self.kernel = kernel or KernelSpec()
        self.npts = npts
        tr = _transforms(self.kernel, npts)
        w_top = 200.0 / (self.moll.t_halfwidth * eps**2)
        k_top = 200.0 / (self.moll.r0 * eps)
        w, ww = gauss_legendre_panels(_frequency_edges(w_top), npts)
        k, kw = gauss_legendre_panels(_frequency_edges(k_top), npts)
        self.w, self.k = w, k
        # measure for int dw d^2k / (2 pi)^3 over w > 0 (doubled by reality), radial k
        self.weight = (2.0 / (2 * pi) ** 2) * np.outer(ww, kw * k)
        mu = self.kernel.mu
        z = mu + k[None, :] ** 2 + 1j * w[:, None]
        khat = sum(mu**m / z ** (m + 1) for m in range(self.kernel.n_sub + 1))
        self.khat = khat + tr.lookup(tr.D, w, k)
        self.qhat = tr.lookup(tr.Qh, w, k)
        self.chi = self.moll.hat_t(w * eps**2)[:, None] * self.moll.hat_x(k * eps)[None, :]
        self.chi2 = np.abs(self.chi) ** 2

    def _int(self, integrand):
        return float(np.sum(self.weight * np.real(integrand)))

    def cbar(self):
        return self._int(np.abs(self.khat) ** 2 * self.chi2)

    def chat(self, j=1, n_theta=16):
        th = 2 * pi * np.arange(n_theta) / n_theta
        ang = np.cos(th) ** 2 if j == 1 else np.sin(th) ** 2
        # radial measure already carries 2 pi; replace it by the angular average of k_j^2/k^2
        factor = ang.mean()
        kk = self.k[None, :] ** 2
        return self._int(factor * kk * np.abs(self.khat) ** 2 * np.conj(self.khat) * self.chi2)

    def ctilde(self):
        return self._int(self.chi2 * np.conj(self.khat) ** 2)

    def identity_terms(self):
        kk = self.k[None, :] ** 2
        lhs = 2 * self._int(kk * np.abs(self.khat) ** 2 * self.khat * self.chi2) - self.cbar()
        t1 = self.ctilde()
        t2 = self._int(self.khat**2 * np.conj(self.qhat) * self.chi2)
        t3 = self._int(self.qhat * np.abs(self.khat) ** 2 * self.chi2)
        return lhs, (t1, t2, t3)

    def ctilde0_fourier(self):
        return self._int(self.khat**2 * self.chi)


def ctilde0(eps, moll=None, npts=64):
    """(K * K^eps)(0) = int_0^tau w chi_t^eps(-w) (G(w) * chi_x^eps)(0) dw.

    Only times below the mollifier support enter, where K coincides with the
    heat kernel; the semigroup property collapses the double time integral.
    A non-anticipative mollifier has chi_t(-w) = 0 there, so the value is 0.
    """
    moll = moll or MollifierSpec()
    if moll.variant == "nonanticipative":
        return 0.0
    tau = moll.t_halfwidth * eps**2
    wn, ww = gauss_legendre_panels(np.linspace(0, tau, 9), npts)
    kn, kw = gauss_legendre_panels(_frequency_edges(400 / (moll.r0 * eps)), 16)
    spatial = (np.exp(-np.outer(wn, kn**2)) * moll.hat_x(kn * eps)[None, :]) @ (kw * kn) / (2 * pi)
    phi = moll.phi_t(-wn / eps**2) / eps**2
    return float(np.sum(ww * wn * phi * spatial))


def compute_constants(eps, moll=None, kernel=None, alg_lambda=None, with_error=True):
    moll = moll or MollifierSpec()
    kernel = kernel or KernelSpec()
    ev = ConstantsEvaluator(eps, moll, kernel, npts=16)
    cb, ch, ct = ev.cbar(), ev.chat(1), ev.ctilde()
    errors = {}
    if with_error:
        ev2 = ConstantsEvaluator(eps, moll, kernel, npts=24)
        errors = {
            "cbar_eps": abs(ev2.cbar() - cb),
            "chat_eps": abs(ev2.chat(1) - ch),
            "ctilde_eps": abs(ev2.ctilde() - ct),
        }
        errors["csym_eps"] = 4 * errors["chat_eps"] + errors["cbar_eps"]
    return RenormConstants(
        eps=eps,
        cbar_eps=cb,
        chat_eps=ch,
        csym_eps=4 * ch - cb,
        ctilde_eps=ct,
        ctilde0_eps=ctilde0(eps, moll),
        lam=alg_lambda,
        errors=errors,
        mollifier=moll.fingerprint(),
        kernel=kernel.fingerprint(),
    )


def cbar(eps, moll=None, kernel=None):
    return ConstantsEvaluator(eps, moll, kernel).cbar()


def chat(eps, j=1, moll=None, kernel=None):
    return ConstantsEvaluator(eps, moll, kernel).chat(j)


def csym(eps, moll=None, kernel=None):
    ev = ConstantsEvaluator(eps, moll, kernel)
    return 4 * ev.chat(1) - ev.cbar()


def ctilde(eps, variant="moll-moll", moll=None, kernel=None):
    if variant == "moll-moll":
        return ConstantsEvaluator(eps, moll, kernel).ctilde()
    if variant == "limit-delta0":
        return ctilde0(eps, moll)
    raise ValueError(f"unknown ctilde variant {variant!r}")


def identity_residual(eps, moll=None, kernel=None):
    lhs, terms = ConstantsEvaluator(eps, moll, kernel).identity_terms()
    return lhs, terms, abs(lhs - sum(terms))


def csym_limit(eps_list, moll=None, kernel=None):
    """C_SYM along a sequence of eps with successive Cauchy differences."""
    vals = [csym(e, moll, kernel) for e in eps_list]
    diffs = [abs(a - b) for a, b in zip(vals, vals[1:])]
    decreasing = all(b < a for a, b in zip(diffs, diffs[1:]))
    return {"eps": list(eps_list), "csym": vals, "cauchy": diffs, "decreasing": decreasing}


LOG2_OVER_4PI = log(2) / (4 * pi)
