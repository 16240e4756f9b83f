"""Exact Fourier sampling of the additive stochastic heat equation on the torus and its second moments.

Psi solves (d_t - Laplace) Psi = xi with Psi(0) = 0, componentwise for i = 1, 2 and
each basis direction of the algebra. In the basis e_k(x) = exp(2 pi i k.x) every
mode is an Ornstein-Uhlenbeck process, so Psi^(k)(t) is a centred complex Gaussian
with E|Psi^(k)|^2 = (1 - exp(-2 lam t)) / (2 lam), lam = (2 pi |k|)^2, and the
zero mode is a Brownian motion.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from .lie import get_algebra, noise_rng, sample_white_noise
from .mollifier import MollifierSpec

DEFAULT_K = 128


def mode_variance(k1, k2, t):
    """Var_k(t) for wave vectors (k1, k2); equals t at k = 0."""
    lam = (2 * pi) ** 2 * (np.asarray(k1, float) ** 2 + np.asarray(k2, float) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -np.expm1(-2 * lam * t) / (2 * lam)
    return np.where(lam == 0, float(t), v)


def _grid(K):
    k = np.arange(-K, K + 1)
    return np.meshgrid(k, k, indexing="ij")


def _half_plane(K):
    """Wave vectors with k > 0 in lexicographic order; their negatives complete the box minus 0."""
    k1, k2 = _grid(K)
    k1, k2 = k1.ravel(), k2.ravel()
    keep = (k1 > 0) | ((k1 == 0) & (k2 > 0))
    return k1[keep], k2[keep]


@dataclass
class SpectralField:
    """coeffs[i, k1 + K, k2 + K, a]: Fourier coefficient of the i-th component along e_a."""

    coeffs: np.ndarray
    t: float
    K: int

    def reality_residual(self):
        c = self.coeffs
        return float(np.max(np.abs(c - np.conj(c[:, ::-1, ::-1]))))

    def segment_values(self, x, v):
        """Psi(l) for segments (M, 2) x (M, 2) -> (M, dim)."""
        k1, k2 = _grid(self.K)
        W = segment_weights(k1.ravel(), k2.ravel(), x, v)  # (2, M, modes)
        c = self.coeffs.reshape(2, -1, self.coeffs.shape[-1])
        return np.real(np.einsum("imq,iqa->ma", W, c))


def _sample_half(t, K, rng, shape, dtype=np.float64):
    """Half-plane coefficients and the zero mode, shape (*shape, H) and (*shape,)."""
    h1, h2 = _half_plane(K)
    sd = np.sqrt(mode_variance(h1, h2, t) / 2).astype(dtype)
    z = rng.standard_normal(tuple(shape) + (2, h1.size), dtype=dtype)
    half = (z[..., 0, :] + 1j * z[..., 1, :]) * sd
    zero = rng.standard_normal(tuple(shape)) * np.sqrt(t)
    return half, zero


def sample_she(t, K=DEFAULT_K, rng=None, alg=None):
    """One exact sample of Psi(t) truncated to |k|_inf <= K."""
    if t < 0:
        raise ValueError("t must be non-negative")
    alg = alg or get_algebra()
    rng = rng if rng is not None else np.random.default_rng()
    half, zero = _sample_half(t, K, rng, (2, alg.dim))
    n = 2 * K + 1
    c = np.zeros((2, alg.dim, n, n), complex)
    h1, h2 = _half_plane(K)
    c[:, :, h1 + K, h2 + K] = half
    c[:, :, -h1 + K, -h2 + K] = np.conj(half)
    c[:, :, K, K] = zero
    return SpectralField(np.moveaxis(c, 1, -1), float(t), K)


# ---------------------------------------------------------------------------
# functionals and exact second moments


def segment_weights(k1, k2, x, v):
    """w[i, m, k] with Psi(l_m) = sum_{i,k} w[i, m, k] Psi^_i(k) for segments l_m = (x_m, v_m)."""
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))
    k = np.stack([np.asarray(k1, float), np.asarray(k2, float)], -1)
    ph0 = 2 * pi * x @ k.T
    th = 2 * pi * v @ k.T
    small = np.abs(th) < 1e-9
    # int_0^1 exp(i th s) ds
    avg = np.where(small, 1.0 + 0.5j * th, np.expm1(1j * np.where(small, 1.0, th)) / (1j * np.where(small, 1.0, th)))
    base = np.exp(1j * ph0) * avg
    return np.stack([v[:, 0:1] * base, v[:, 1:2] * base])


def triangle_weights(k1, k2, P):
    """Weights of Psi(dP) = sum over the three edges, P of shape (M, 3, 2)."""
    P = np.asarray(P, float)
    w = 0
    for j in range(3):
        w = w + segment_weights(k1, k2, P[:, j], P[:, (j + 1) % 3] - P[:, j])
    return w


def indicator_fourier(k1, k2, P):
    """int_P exp(-2 pi i k.x) dx for triangles P (M, 3, 2), via the divergence theorem.

    exp(-i w.x) = div(i w / |w|^2 exp(-i w.x)), so the area integral is a sum of
    edge integrals weighted by w.n_e; at k = 0 it is the area.
    """
    P = np.asarray(P, float)
    kk = np.stack([np.asarray(k1, float), np.asarray(k2, float)], -1)
    w = 2 * pi * kk  # (Q, 2)
    w2 = np.sum(w * w, -1)
    signed = 0.5 * ((P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0]))
    orient = np.sign(signed)[:, None]
    out = np.zeros((len(P), len(kk)), complex)
    for j in range(3):
        a, b = P[:, j], P[:, (j + 1) % 3]
        d = b - a
        # outward normal times edge length for a counter-clockwise triangle: (d_2, -d_1)
        nl = np.stack([d[:, 1], -d[:, 0]], -1)
        wn = nl @ w.T * orient
        wd = d @ w.T
        small = np.abs(wd) < 1e-9
        safe = np.where(small, 1.0, wd)
        edge = np.exp(-1j * (a @ w.T)) * np.where(small, 1.0 - 0.5j * wd, (1 - np.exp(-1j * safe)) / (1j * safe))
        out += 1j * wn * edge
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(w2[None] > 0, out / np.where(w2 > 0, w2, 1.0)[None], np.abs(signed)[:, None])
    return out


@dataclass
class MomentOracle:
    value: np.ndarray
    truncation: np.ndarray  # estimated tail beyond |k|_inf = K


def _box(K):
    k1, k2 = _grid(K)
    return k1.ravel(), k2.ravel()


def _shell(K):
    k1, k2 = _box(2 * K)
    keep = np.maximum(np.abs(k1), np.abs(k2)) > K
    return k1[keep], k2[keep]


def _tail(shell):
    # tails of these sums decay like 1/K, so the tail beyond K is about twice the K..2K shell
    return 2.0 * shell


def segment_second_moment(x, v, t, K=DEFAULT_K):
    """E|Psi(t)(l)|^2 per basis direction for segments (M, 2), (M, 2); truncated at K."""
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))

    def s(k1, k2):
        W = segment_weights(k1, k2, x, v)
        return np.sum(mode_variance(k1, k2, t)[None] * np.sum(np.abs(W) ** 2, axis=0), -1)

    return MomentOracle(s(*_box(K)), _tail(s(*_shell(K))))


def triangle_second_moment(P, t, K=DEFAULT_K):
    """E|Psi(t)(dP)|^2 per basis direction by Stokes: sum_k |1_P^(k)|^2 |2 pi k|^2 Var_k(t)."""
    P = np.asarray(P, float).reshape(-1, 3, 2)

    def s(k1, k2):
        F = indicator_fourier(k1, k2, P)
        lam = (2 * pi) ** 2 * (k1.astype(float) ** 2 + k2.astype(float) ** 2)
        return np.sum(np.abs(F) ** 2 * (lam * mode_variance(k1, k2, t))[None], -1)

    return MomentOracle(s(*_box(K)), _tail(s(*_shell(K))))


def stationary_segment_moment(x, v, K=DEFAULT_K):
    """t -> infinity limit of the segment moment, Var_k = 1 / (2 (2 pi |k|)^2) without the zero mode."""
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))
    k1, k2 = _box(K)
    nz = (k1 != 0) | (k2 != 0)
    k1, k2 = k1[nz], k2[nz]
    W = segment_weights(k1, k2, x, v)
    lam = (2 * pi) ** 2 * (k1**2 + k2**2)
    return np.sum((1 / (2 * lam))[None] * np.sum(np.abs(W) ** 2, axis=0), -1)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class MonteCarloMoment:
    estimate: np.ndarray
    stderr: np.ndarray
    n: int


def monte_carlo_moments(weights_fn, t, n_replicas=10_000, K=DEFAULT_K, seed=0, chunk=100):
    """Mean and standard error of |Y|^2 for the functionals Y = sum_k w Psi^(k) of exact samples.

    weights_fn(k1, k2) returns (2, P, modes) weights on the given wave vectors.
    Samples use the half-plane representation of a real field, one basis direction,
    drawn in single precision (the statistical error dominates by far).
    """
    rng = noise_rng(seed, 101)
    h1, h2 = _half_plane(K)
    Wh = weights_fn(h1, h2)  # (2, P, H)
    P = Wh.shape[1]
    Wm = np.transpose(Wh, (0, 2, 1)).reshape(-1, P).astype(np.complex64)  # (2H, P)
    W0 = np.real(weights_fn(np.zeros(1, int), np.zeros(1, int))[..., 0])  # (2, P)
    s1 = s2 = 0.0
    done = 0
    while done < n_replicas:
        n = min(chunk, n_replicas - done)
        half, zero = _sample_half(t, K, rng, (n, 2), np.float32)
        Y = 2 * np.real(half.reshape(n, -1) @ Wm).astype(float) + zero.astype(float) @ W0
        Y2 = Y**2
        s1 = s1 + Y2.sum(0)
        s2 = s2 + (Y2**2).sum(0)
        done += n
    mean = s1 / done
    var = s2 / done - mean**2
    return MonteCarloMoment(mean, np.sqrt(np.maximum(var, 0) / done), done)


@dataclass
class ProbeResult:
    shape_id: str
    t: float
    size: float  # |l| for segments, |P| for triangles
    mc_estimate: float
    stderr: float
    oracle: float
    bound_rhs: float
    passed: bool


def default_probes(seed=0, n_t=4, per_t=5):
    """n_t * per_t random segments and triangles (alternating) for sampler/oracle agreement."""
    rng = np.random.default_rng(seed)
    ts = 2.0 ** -rng.uniform(3, 10, n_t)
    probes = []
    for t in ts:
        for _ in range(per_t):
            if len(probes) % 2 == 0:
                L = 2.0 ** -rng.uniform(2.2, 6)
                ang = rng.uniform(0, 2 * pi)
                x = rng.uniform(-0.5, 0.5, 2)
                v = L * np.array([np.cos(ang), np.sin(ang)])
                probes.append(("segment", float(t), (x, v)))
            else:
                r = 2.0 ** -rng.uniform(3, 7)
                c = rng.uniform(-0.5, 0.5, 2)
                th = rng.uniform(0, 2 * pi) + np.array([0, 2 * pi / 3, 4 * pi / 3]) + rng.uniform(-0.4, 0.4, 3)
                P = c + r * np.stack([np.cos(th), np.sin(th)], -1)
                probes.append(("triangle", float(t), P))
    return probes


def _size(kind, geom):
    if kind == "segment":
        return float(np.hypot(*geom[1]))
    P = geom
    return float(0.5 * abs((P[1, 0] - P[0, 0]) * (P[2, 1] - P[0, 1]) - (P[1, 1] - P[0, 1]) * (P[2, 0] - P[0, 0])))


def bound_rhs(kind, t, size, kappa=0.4):
    """t^kappa |l|^(2 - 2 kappa) for segments, t^kappa |P|^(1 - kappa) for triangles."""
    if kind == "segment":
        return t**kappa * size ** (2 - 2 * kappa)
    return t**kappa * size ** (1 - kappa)


def check_probes(probes=None, n_replicas=10_000, K=DEFAULT_K, seed=0, n_se=3.0, kappa=0.4):
    """Monte Carlo vs Fourier oracle on every probe; probes at equal t share one batch of samples."""
    probes = probes if probes is not None else default_probes(seed)
    out = [None] * len(probes)
    by_t = {}
    for j, (kind, t, geom) in enumerate(probes):
        by_t.setdefault(t, []).append(j)
    for t, idx in by_t.items():

        def weights(k1, k2, idx=idx):
            ws = []
            for j in idx:
                kind, _, geom = probes[j]
                if kind == "segment":
                    ws.append(segment_weights(k1, k2, geom[0][None], geom[1][None]))
                else:
                    ws.append(triangle_weights(k1, k2, geom[None]))
            return np.concatenate(ws, axis=1)

        mc = monte_carlo_moments(weights, t, n_replicas, K, seed=seed + int(t * 1e9) % 1000)
        for pos, j in enumerate(idx):
            kind, _, geom = probes[j]
            if kind == "segment":
                orc = float(segment_second_moment(geom[0], geom[1], t, K).value[0])
            else:
                orc = float(triangle_second_moment(geom, t, K).value[0])
            size = _size(kind, geom)
            est, se = float(mc.estimate[pos]), float(mc.stderr[pos])
            out[j] = ProbeResult(f"{kind}-{j}", t, size, est, se, orc, bound_rhs(kind, t, size, kappa), abs(est - orc) <= n_se * se)
    return out


def _segment_spectrum(x, v, K):
    k1, k2 = _box(K)
    W = segment_weights(k1, k2, np.atleast_2d(x), np.atleast_2d(v))
    return k1, k2, np.sum(np.abs(W) ** 2, axis=0)[0]


def _triangle_spectrum(P, K):
    k1, k2 = _box(K)
    F = indicator_fourier(k1, k2, np.asarray(P, float)[None])[0]
    lam = (2 * pi) ** 2 * (k1.astype(float) ** 2 + k2.astype(float) ** 2)
    return k1, k2, np.abs(F) ** 2 * lam


def _moments_over_t(spectrum, ts):
    k1, k2, w = spectrum
    return np.array([np.sum(w * mode_variance(k1, k2, t)) for t in ts])


@dataclass
class ExponentFit:
    kind: str
    time_exponent: float  # min over shapes of the fitted d log E / d log t while t << diam^2
    size_exponent: float  # min over t of the fitted d log E / d log size while diam^2 << t
    time_admissible: float  # kappa
    size_admissible: float  # 2 - 2 kappa for segments, 1 - kappa for triangles
    tolerance: float
    passed: bool


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def exponent_check(kind, kappa=0.4, K=DEFAULT_K, tolerance=0.1, sep=16.0):
    """Fit the power laws of the exact second moments in the two scaling regimes.

    E <= C t^kappa size^p (p = 2 - 2 kappa for segments, 1 - kappa for triangles)
    forces the t-exponent to be >= kappa where t << diam^2 and the size-exponent
    to be >= p where diam^2 << t. Both fits must land within tolerance of these
    admissible half-lines. Times stay above 2^-16 so that the spectral cutoff
    K = 128 resolves the heat scale.
    """
    ts = 2.0 ** -np.arange(2, 16.5, 0.5)
    if kind == "segment":
        sizes = 2.0 ** -np.arange(2, 7.5, 0.5)  # lengths
        diams = sizes
        spectra = [_segment_spectrum([0.0, 0.0], [L, 0.0], K) for L in sizes]
        p = 2 - 2 * kappa
        size_of = sizes
    elif kind == "triangle":
        inr = 2.0 ** -np.arange(4, 7.5, 0.5)  # equilateral, inradius in [2^-7, 2^-4]
        th = np.array([0, 2 * pi / 3, 4 * pi / 3]) + 0.3
        shapes = [2 * h * np.stack([np.cos(th), np.sin(th)], -1) for h in inr]
        diams = 2 * np.sqrt(3) * inr
        spectra = [_triangle_spectrum(P, K) for P in shapes]
        p = 1 - kappa
        size_of = 3 * np.sqrt(3) * inr**2
    else:
        raise ValueError("kind must be 'segment' or 'triangle'")
    E = np.array([_moments_over_t(sp, ts) for sp in spectra])  # (shapes, ts)
    t_exp = []
    for j, d in enumerate(diams):
        sel = ts <= d**2 / sep
        if sel.sum() >= 3:
            t_exp.append(_slope(ts[sel], E[j, sel]))
    s_exp = []
    for q, t in enumerate(ts):
        sel = diams**2 <= t / sep
        if sel.sum() >= 3:
            s_exp.append(_slope(size_of[sel], E[sel, q]))
    te, se = min(t_exp), min(s_exp)
    ok = te >= kappa - tolerance and se >= p - tolerance
    return ExponentFit(kind, te, se, kappa, p, tolerance, ok)


# ---------------------------------------------------------------------------
# mollified noise on the lattice


class MollifiedNoise:
    """xi^eps = chi^eps * xi on the lattice, from one seeded white-noise array.

    Slice n of the white noise is drawn from the stream (seed, n), so every consumer
    using the same seed sees the same underlying noise. The space-time convolution
    is a sum over time lags of FFT spatial convolutions.
    """

    def __init__(self, seed, eps, chi: MollifierSpec, N, dt, alg=None, cache=64):
        self.seed, self.eps, self.chi, self.N, self.dt = seed, eps, chi, N, dt
        self.alg = alg or get_algebra()
        stencil = chi.spatial_stencil(N, eps)
        m = stencil.shape[0] // 2
        kern = np.zeros((N, N))
        j = np.arange(-m, m + 1) % N
        np.add.at(kern, (j[:, None], j[None, :]), stencil)
        self.stencil = stencil
        self.kernel_hat = np.fft.fft2(kern * (1.0 / N) ** 2)
        self.lags, self.weights = chi.time_weights(dt, eps)
        self._cache = {}
        self._cache_size = cache

    def white(self, n):
        return sample_white_noise(self.N, self.dt, self.seed, self.alg, stream=int(n) + 1_000_000)

    def smooth(self, xi):
        """Spatial convolution of a (2, N, N, dim) slice with the stencil."""
        return np.real(np.fft.ifft2(np.fft.fft2(xi, axes=(1, 2)) * self.kernel_hat[None, :, :, None], axes=(1, 2)))

    def _smoothed(self, n):
        if n not in self._cache:
            if len(self._cache) >= self._cache_size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[n] = self.smooth(self.white(n))
        return self._cache[n]

    def __call__(self, n):
        """Mollified noise at time step n, shape (2, N, N, dim)."""
        out = 0.0
        for m, w in zip(self.lags, self.weights):
            out = out + (w * self.dt) * self._smoothed(n - m)
        return out

    def variance_oracle(self):
        """Discrete (chi^eps * chi^eps)(0) times the white-noise normalisation: a^2 dt sum c_m^2 w_y^2."""
        a = 1.0 / self.N
        return float(np.sum(self.stencil**2) * a**4 * np.sum(self.weights**2) * self.dt**2 / (a**2 * self.dt))


def mollified_noise(xi_seed, eps, chi=None, N=64, dt=None, step=0, alg=None):
    """One slice of the mollified lattice noise (see MollifiedNoise)."""
    chi = chi or MollifierSpec()
    dt = dt or (1.0 / N) ** 2 / 4
    return MollifiedNoise(xi_seed, eps, chi, N, dt, alg)(step)
