"""Space-time mollifiers chi(t, x) = phi_t(t) phi_x(|x|) and their rescalings.

chi^eps(t, x) = eps^-4 chi(t / eps^2, x / eps). Both factors are polynomial
bumps (1 - s^2)^p, normalised to unit mass, with support inside the parabolic
ball {sqrt|t| + |x| < 1/4}. The non-anticipative variant moves the time
factor into t in (0, tau).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma, factorial, sqrt, pi

import numpy as np
from scipy import special

VARIANTS = ("symmetric", "nonanticipative")


class UnderResolvedError(ValueError):
    pass


def _jinc(nu, z):
    """J_nu(z) / z^nu, continuous at z = 0."""
    z = np.abs(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = z < 1e-3
    zs = z[small]
    # two-term series J_nu(z)/z^nu = 2^-nu/Gamma(nu+1) * (1 - z^2/(4(nu+1)))
    out[small] = (1 - zs**2 / (4 * (nu + 1)) + zs**4 / (32 * (nu + 1) * (nu + 2))) / (2**nu * gamma(nu + 1))
    zl = z[~small]
    out[~small] = special.jv(nu, zl) / zl**nu
    return out


@dataclass(frozen=True)
class MollifierSpec:
    variant: str = "symmetric"
    power: int = 6
    r0: float = 0.125  # spatial support radius of chi
    tau: float = 1.0 / 64  # time support: (-tau, tau) or (0, tau)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown mollifier variant {self.variant!r}")
        if sqrt(self.tau) + self.r0 > 0.25 + 1e-15:
            raise ValueError("mollifier support must lie in the parabolic ball of radius 1/4")

    @property
    def t_center(self):
        return 0.0 if self.variant == "symmetric" else self.tau / 2

    @property
    def t_halfwidth(self):
        return self.tau if self.variant == "symmetric" else self.tau / 2

    def fingerprint(self):
        return f"{self.variant}-p{self.power}-r{self.r0:g}-t{self.tau:g}"

    # real space
    def phi_t(self, t):
        p = self.power
        s = (np.asarray(t, float) - self.t_center) / self.t_halfwidth
        c = gamma(p + 1.5) / (sqrt(pi) * gamma(p + 1)) / self.t_halfwidth
        return np.where(np.abs(s) < 1, c * np.clip(1 - s * s, 0, None) ** p, 0.0)

    def phi_x(self, r):
        p = self.power
        s = np.asarray(r, float) / self.r0
        c = (p + 1) / (pi * self.r0**2)
        return np.where(s < 1, c * np.clip(1 - s * s, 0, None) ** p, 0.0)

    def chi(self, t, x1, x2):
        return self.phi_t(t) * self.phi_x(np.hypot(x1, x2))

    def chi_eps(self, t, x1, x2, eps):
        return self.chi(np.asarray(t) / eps**2, np.asarray(x1) / eps, np.asarray(x2) / eps) / eps**4

    # Fourier side, f^(w) = int f(t) e^{-i w t} dt
    def hat_t(self, w):
        p = self.power
        h = self.t_halfwidth
        nu = p + 0.5
        val = gamma(nu + 1) * 2**nu * _jinc(nu, np.asarray(w, float) * h)
        return val * np.exp(-1j * np.asarray(w, float) * self.t_center)

    def hat_x(self, k):
        p = self.power
        return 2 ** (p + 1) * factorial(p + 1) * _jinc(p + 1, np.asarray(k, float) * self.r0)

    def hat_eps(self, w, k, eps):
        return self.hat_t(np.asarray(w) * eps**2) * self.hat_x(np.asarray(k) * eps)

    # lattice realisations
    def spatial_stencil(self, N, eps):
        """Normalised stencil of phi_x^eps on the N x N torus grid (sum * a^2 = 1)."""
        a = 1.0 / N
        rad = self.r0 * eps
        if rad < 2 * a:
            raise UnderResolvedError(
                f"mollifier radius {rad:.3g} is below two grid cells (a = {a:.3g}); use eps >= {2 * a / self.r0:.3g}"
            )
        m = int(np.ceil(rad / a))
        j = np.arange(-m, m + 1)
        X1, X2 = np.meshgrid(j * a, j * a, indexing="ij")
        w = self.phi_x(np.hypot(X1, X2) / eps)
        return w / (w.sum() * a * a)

    def time_weights(self, dt, eps):
        """Weights c_m on lags m*dt so that sum_m c_m dt = 1 (lags may be negative)."""
        lo = (self.t_center - self.t_halfwidth) * eps**2
        hi = (self.t_center + self.t_halfwidth) * eps**2
        m = np.arange(int(np.floor(lo / dt)), int(np.ceil(hi / dt)) + 1)
        w = self.phi_t(m * dt / eps**2)
        if w.sum() <= 0:
            # time support thinner than one step: collapse onto the nearest lag
            m = np.array([int(round(self.t_center * eps**2 / dt))])
            w = np.ones(1)
        return m, w / (w.sum() * dt)
