"""Gauge transformations, holonomies, Wilson loops, gauge recovery and orbit-distance bounds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .lie import Ad_matrix, exp_map, get_algebra, log_map
from .oneform import (
    CurveSpec,
    LatticeGaugeField,
    SampleFamily,
    SegmentFunction,
    norm_alpha,
)

_BY_DIM = {3: "su2", 8: "su3", 1: "abelian-test"}


class NotGaugeEquivalentError(ValueError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def algebra_for(dim, name=None):
    return get_algebra(name or _BY_DIM[dim])


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


@dataclass
class GaugeTransform:
    """Lattice of group elements g[n1, n2] at sites (n1 a, n2 a).

    Off-site values use g(x) = exp(bilinear blend of log(g[corner] g[base]^-1)) g[base],
    which is exact at the sites. If phi is given, g = exp(phi) is evaluated exactly instead.
    """

    g: np.ndarray  # (N, N, n, n) complex
    algebra: str = "su2"
    phi: object = None  # optional callable points (M, 2) -> (M, dim)
    _logs: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.g = np.asarray(self.g, complex)
        n = self.g.shape[-1]
        err = np.max(np.abs(self.g @ _dagger(self.g) - np.eye(n)))
        if err > 1e-10:
            raise ValueError(f"gauge transform is not unitary (residual {err:.2e})")

    @property
    def N(self):
        return self.g.shape[0]

    @property
    def alg(self):
        return get_algebra(self.algebra)

    @classmethod
    def identity(cls, N, algebra="su2"):
        return cls(get_algebra(algebra).identity((N, N)), algebra)

    @classmethod
    def constant(cls, g0, N, algebra="su2"):
        return cls(np.broadcast_to(np.asarray(g0, complex), (N, N) + np.shape(g0)).copy(), algebra)

    @classmethod
    def from_function(cls, phi, N, algebra="su2"):
        """g = exp(phi) with phi(points (M, 2)) -> (M, dim), sampled on the grid and kept for exact off-site use."""
        n = np.arange(N) / N
        X1, X2 = np.meshgrid(n, n, indexing="ij")
        pts = np.stack([X1.ravel(), X2.ravel()], -1)
        alg = get_algebra(algebra)
        g = exp_map(phi(pts), alg).reshape(N, N, alg.rep_dim, alg.rep_dim)
        return cls(g, algebra, phi)

    def _ratio_logs(self):
        if self._logs is None:
            g = self.g
            inv = _dagger(g)
            out = {}
            for s in ((1, 0), (0, 1), (1, 1)):
                gs = np.roll(g, (-s[0], -s[1]), axis=(0, 1))
                out[s] = log_map(gs @ inv, self.alg)
            self._logs = out
        return self._logs

    def at(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        alg = self.alg
        if self.phi is not None:
            return exp_map(self.phi(pts), alg)
        N = self.N
        u = (pts * N) % N
        i0 = np.floor(u).astype(int)
        fr = u - i0
        i0 %= N
        L = self._ratio_logs()
        w10 = fr[:, 0] * (1 - fr[:, 1])
        w01 = (1 - fr[:, 0]) * fr[:, 1]
        w11 = fr[:, 0] * fr[:, 1]
        X = (
            w10[:, None] * L[1, 0][i0[:, 0], i0[:, 1]]
            + w01[:, None] * L[0, 1][i0[:, 0], i0[:, 1]]
            + w11[:, None] * L[1, 1][i0[:, 0], i0[:, 1]]
        )
        return exp_map(X, alg) @ self.g[i0[:, 0], i0[:, 1]]

    def compose(self, other):
        """(self * other)(x) = self(x) other(x)."""
        return GaugeTransform(self.g @ other.g, self.algebra)

    def holder_seminorm(self, alpha):
        """max over nearest-neighbour pairs of |g(x) - g(y)| / a^alpha."""
        a = 1.0 / self.N
        d = [np.linalg.norm(np.roll(self.g, -1, axis=ax) - self.g, axis=(-2, -1), ord=2) for ax in (0, 1)]
        return float(max(np.max(x) for x in d) / a**alpha)


def apply_gauge(A: LatticeGaugeField, g: GaugeTransform) -> LatticeGaugeField:
    """A^g_i(x) = Ad_{g(x)} A_i(x) - log(g(x + a e_i) g(x)^-1) / a on every site."""
    if A.N != g.N:
        raise ValueError(f"grid mismatch: field N={A.N}, gauge N={g.N}")
    alg = get_algebra(A.algebra)
    Adg = Ad_matrix(g.g, alg)  # (N, N, dim, dim)
    out = np.empty_like(A.A)
    inv = _dagger(g.g)
    for i in (0, 1):
        ratio = np.roll(g.g, -1, axis=i) @ inv
        out[i] = np.einsum("xyab,xyb->xya", Adg, A.A[i]) - log_map(ratio, alg) / A.a
    return LatticeGaugeField(out, A.algebra)


class GaugedSegmentFunction(SegmentFunction):
    """Segment-level gauge action A^g(l) = Ad_{g(l_i)} A(l) - log(g(l_f) g(l_i)^-1).

    On lattice links this is a times the lattice formula of apply_gauge; on short
    segments it is a first-order approximation of the exact action.
    """

    def __init__(self, A: SegmentFunction, g: GaugeTransform):
        self.A, self.gauge, self.dim = A, g, A.dim

    def __call__(self, x, v):
        x = np.atleast_2d(np.asarray(x, float))
        v = np.atleast_2d(np.asarray(v, float))
        alg = self.gauge.alg
        gi = self.gauge.at(x)
        gf = self.gauge.at(x + v)
        AdA = np.einsum("mab,mb->ma", Ad_matrix(gi, alg), self.A(x, v))
        return AdA - log_map(gf @ _dagger(gi), alg)


def _ordered_product(mats):
    """M_0 M_1 ... M_{n-1} by pairwise reduction (order preserving)."""
    mats = np.asarray(mats)
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[:-1:2] @ mats[1:-1:2], tail])
        else:
            mats = mats[0::2] @ mats[1::2]
    return mats[0]


def holonomy(A: SegmentFunction, curve: CurveSpec, mesh=1 / 256, alg=None):
    """Ordered product exp(A(l_1)) exp(A(l_2)) ... over chords of length <= mesh, left to right along the curve."""
    if mesh <= 0:
        raise ValueError("mesh must be positive")
    alg = alg or algebra_for(A.dim)
    ts = curve.points(mesh)
    p = curve(ts)
    X = A(p[:-1], np.diff(p, axis=0))
    return _ordered_product(scipy.linalg.expm(alg.to_matrix(X)))


def holonomy_covariance_residual(A, g: GaugeTransform, curve: CurveSpec, mesh=1 / 256):
    """Operator-norm gap between hol(A^g) and g(gamma(0)) hol(A) g(gamma(1))^-1."""
    alg = g.alg
    lhs = holonomy(GaugedSegmentFunction(A, g), curve, mesh, alg)
    ends = curve(np.array([0.0, 1.0]))
    g0, g1 = g.at(ends)
    rhs = g0 @ holonomy(A, curve, mesh, alg) @ _dagger(g1)
    return float(np.linalg.norm(lhs - rhs, 2))


def wilson_loop(A, loop: CurveSpec, mesh=1 / 256, alg=None):
    """Re tr hol(A, loop) / tr(1) for a closed loop."""
    if not loop.closed:
        raise ValueError("Wilson loops need a closed curve")
    H = holonomy(A, loop, mesh, alg)
    return float(np.real(np.trace(H)) / H.shape[0])


# ---------------------------------------------------------------------------
# gauge recovery


def _link_holonomies(A, N, mesh, alg, origin):
    """Parallel transporters along the forward links of the grid through origin, U[i][n1, n2].

    A lattice field on the same grid uses its own links exp(a A_i(x)), the
    transporter for which apply_gauge is covariant up to O(a^2) per link; a
    segment function is integrated by holonomy with the given mesh.
    """
    a = 1.0 / N
    if isinstance(A, LatticeGaugeField):
        if A.N != N or np.any(np.abs(np.asarray(origin) * N - np.round(np.asarray(origin) * N)) > 1e-12):
            raise ValueError("lattice input needs N equal to its grid and x on a lattice site")
        shift = tuple(int(round(c * N)) for c in origin)
        out = []
        for i in (0, 1):
            Ai = np.roll(A.A[i], (-shift[0], -shift[1]), axis=(0, 1))
            out.append(scipy.linalg.expm(alg.to_matrix(a * Ai)))
        return out
    sub = max(1, int(np.ceil(a / mesh - 1e-12)))
    n = np.arange(N) * a
    X1, X2 = np.meshgrid(n, n, indexing="ij")
    sites = origin + np.stack([X1.ravel(), X2.ravel()], -1)
    out = []
    for i in (0, 1):
        e = np.zeros(2)
        e[i] = a / sub
        mats = None
        for k in range(sub):
            Mk = scipy.linalg.expm(alg.to_matrix(A(sites + k * e, np.broadcast_to(e, sites.shape))))
            mats = Mk if mats is None else mats @ Mk
        out.append(mats.reshape(N, N, alg.rep_dim, alg.rep_dim))
    return out


def _staircase(U, N):
    """Transport from the origin to every site: e_1 leg then e_2 leg, each of length <= N/2 links."""
    n = U[0].shape[-1]
    H = np.empty((N, N, n, n), complex)
    H[0, 0] = np.eye(n)
    half = N // 2
    for m in range(1, half + 1):
        H[m, 0] = H[m - 1, 0] @ U[0][m - 1, 0]
    for m in range(1, N - half):
        H[-m, 0] = H[1 - m, 0] @ _dagger(U[0][-m, 0])
    for m in range(1, half + 1):
        H[:, m] = H[:, m - 1] @ U[1][:, m - 1]
    for m in range(1, N - half):
        H[:, -m] = H[:, 1 - m] @ _dagger(U[1][:, -m])
    return H


@dataclass
class RecoveredGauge:
    gauge: GaugeTransform
    residual: float  # max link mismatch |hol(Abar, l) - g(l_i) hol(A, l) g(l_f)^-1|


def recover_gauge(A, Abar, x, g0, N, mesh=None, tol=None, alg=None):
    """Rebuild g with Abar = A^g from holonomies along staircase paths starting at x.

    g(y) = hol(Abar, gamma_xy)^-1 g0 hol(A, gamma_xy), where gamma_xy first runs
    along e_1 and then along e_2 through the grid of spacing 1/N anchored at x,
    taking the shorter way round the torus in each direction. The returned
    transform lives on the sites x + n / N. Path independence is
    checked on every link; the accumulated mismatch of a genuine pair is O(1/N),
    so tol defaults to 2 / N.
    """
    alg = alg or algebra_for(A.dim)
    mesh = mesh or 1.0 / N
    tol = tol if tol is not None else 2.0 / N
    origin = np.asarray(x, float)
    U = _link_holonomies(A, N, mesh, alg, origin)
    V = _link_holonomies(Abar, N, mesh, alg, origin)
    HA = _staircase(U, N)
    HB = _staircase(V, N)
    g = _dagger(HB) @ np.asarray(g0, complex) @ HA
    resid = 0.0
    for i in (0, 1):
        gf = np.roll(g, -1, axis=i)
        gap = V[i] - g @ U[i] @ _dagger(gf)
        resid = max(resid, float(np.max(np.linalg.norm(gap, axis=(-2, -1), ord=2))))
    if resid > tol:
        raise NotGaugeEquivalentError(f"path-independence residual {resid:.3g} exceeds {tol:.3g}", resid)
    return RecoveredGauge(GaugeTransform(g, alg.name), resid)


# ---------------------------------------------------------------------------
# orbit pseudo-metric


def K_distance(nA, nB, nAB):
    """(| |A| - |B| | + 1) / (min(|A|, |B|) + 1) * min(|A - B|, 1)."""
    return (abs(nA - nB) + 1.0) / (min(nA, nB) + 1.0) * min(nAB, 1.0)


@dataclass
class OrbitDistanceReport:
    upper: float
    lower: float
    witness: str
    norms: tuple


def orbit_distance_bounds(A, B, alpha=0.75, family=None, t_grid=11):
    """Sandwich for the orbit pseudo-metric between A and B.

    upper: best chain A -> tA -> tB -> B over t in a grid (t = 1 is the direct step);
    lower: log(1 + h / (r + 1)) with r the smaller norm and h the norm gap.
    All norms are the sampled alpha-norm on one shared family.
    """
    fam = family or SampleFamily()

    def nrm(F):
        return norm_alpha(F, alpha, fam).value

    nA, nB = nrm(A), nrm(B)
    nAB = nrm(A - B)
    best, wit = K_distance(nA, nB, nAB), "direct"
    for t in np.linspace(0, 1, t_grid)[:-1]:
        # sampled norms are homogeneous, so the norms of tA, tB and t(A - B) follow by scaling
        ntA, ntB = t * nA, t * nB
        cost = (
            K_distance(nA, ntA, (1 - t) * nA)
            + K_distance(ntA, ntB, t * nAB)
            + K_distance(ntB, nB, (1 - t) * nB)
        )
        if cost < best:
            best, wit = cost, f"via t={t:.2f}"
    r, h = min(nA, nB), abs(nA - nB)
    lower = float(np.log1p(h / (r + 1.0)))
    if lower > best + 1e-12:
        raise AssertionError("orbit-distance sandwich violated")
    return OrbitDistanceReport(float(best), lower, wit, (nA, nB, nAB))


__all__ = [
    "GaugeTransform",
    "GaugedSegmentFunction",
    "NotGaugeEquivalentError",
    "OrbitDistanceReport",
    "RecoveredGauge",
    "apply_gauge",
    "holonomy",
    "holonomy_covariance_residual",
    "orbit_distance_bounds",
    "recover_gauge",
    "wilson_loop",
]
