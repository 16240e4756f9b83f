"""Additive functions on short segments of the torus, their norms, and Young extension to curves.

Points live on the unit torus; a segment (x, v) starts at x and ends at x + v
with |v| <= 1/4. Segment functions are evaluated in batches: x and v are arrays
of shape (M, 2) and values come back as (M, dim) algebra coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np
import shapely
from scipy.special import zeta

from .lie import get_algebra

MAX_LEN = 0.25


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


_GL_X, _GL_W = _gauss(8)
# the bilinear interpolant is quadratic on each cell crossing, so 3 nodes are exact there
_CELL_X, _CELL_W = _gauss(3)


class RefinementDivergedError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def wrap(p):
    """Reduce coordinates to [-1/2, 1/2)."""
    return (np.asarray(p, float) + 0.5) % 1.0 - 0.5


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Segment:
    x: tuple
    v: tuple

    def __post_init__(self):
        if np.hypot(*self.v) > MAX_LEN + 1e-12:
            raise ValueError(f"segment length {np.hypot(*self.v):.4g} exceeds 1/4")

    @property
    def length(self):
        return float(np.hypot(*self.v))

    @property
    def start(self):
        return np.asarray(self.x, float)

    @property
    def end(self):
        return np.asarray(self.x, float) + np.asarray(self.v, float)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _tri_area(p, q, r):
    return 0.5 * np.abs(_cross(q - p, r - p))


def hull_area4(p0, p1, p2, p3):
    """Area of the convex hull of four planar points (batched).

    The hull is either one of the three quadrilaterals through all points or a
    triangle containing the fourth point; in both cases it has the largest area.
    """
    pts = (p0, p1, p2, p3)
    cands = []
    for a, b, c in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        cands.append(_tri_area(pts[a], pts[b], pts[c]))
    for order in ((0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 1, 3)):
        q = [pts[i] for i in order]
        s = sum(_cross(q[i], q[(i + 1) % 4]) for i in range(4))
        cands.append(0.5 * np.abs(s))
    return np.max(np.stack(cands), axis=0)


def _pair_geometry(x1, v1, x2, v2):
    """Lift the second segment next to the first; return endpoints and the far flag."""
    x1, v1, x2, v2 = (np.asarray(a, float) for a in (x1, v1, x2, v2))
    x2 = x1 + wrap(x2 - x1)
    i1, f1, i2, f2 = x1, x1 + v1, x2, x2 + v2
    di = np.linalg.norm(i1 - i2, axis=-1)
    df = np.linalg.norm(wrap(f1 - f2), axis=-1)
    l1, l2 = np.linalg.norm(v1, axis=-1), np.linalg.norm(v2, axis=-1)
    far = np.maximum(di, df) > 0.25 * np.minimum(l1, l2)
    return i1, f1, i2, f2, di, df, l1, l2, far


def pair_area(x1, v1, x2, v2):
    """Area of the convex hull of (l_i, l_f, lbar_f, lbar_i) in the lifted plane."""
    i1, f1, i2, f2, *_ = _pair_geometry(x1, v1, x2, v2)
    return hull_area4(i1, f1, f2, i2)


def rho(l, lbar):
    """Segment distance: |l| + |lbar| when far, else endpoint gaps plus sqrt of the hull area.

    Accepts Segment objects or (x, v) array pairs of shape (..., 2).
    """
    (x1, v1), (x2, v2) = (_xv(s) for s in (l, lbar))
    i1, f1, i2, f2, di, df, l1, l2, far = _pair_geometry(x1, v1, x2, v2)
    near = di + df + np.sqrt(hull_area4(i1, f1, f2, i2))
    out = np.where(far, l1 + l2, near)
    return float(out) if out.ndim == 0 else out


def _xv(s):
    if isinstance(s, Segment):
        return np.asarray(s.x, float), np.asarray(s.v, float)
    return np.asarray(s[0], float), np.asarray(s[1], float)


@dataclass(frozen=True)
class Triangle:
    """Triangle through three points given in one lifted chart, as three joined segments."""

    p0: tuple
    p1: tuple
    p2: tuple

    def __post_init__(self):
        P = self.points
        diam = max(np.linalg.norm(P[i] - P[j]) for i in range(3) for j in range(i))
        if diam > MAX_LEN + 1e-12:
            raise ValueError(f"triangle diameter {diam:.4g} exceeds 1/4")

    @property
    def points(self):
        return np.array([self.p0, self.p1, self.p2], float)

    @property
    def signed_area(self):
        P = self.points
        return 0.5 * float(_cross(P[1] - P[0], P[2] - P[0]))

    @property
    def area(self):
        return abs(self.signed_area)

    @property
    def orientation(self):
        return int(np.sign(self.signed_area))

    def segments(self):
        P = self.points
        return [Segment(tuple(P[j]), tuple(P[(j + 1) % 3] - P[j])) for j in range(3)]

    @property
    def inradius(self):
        P = self.points
        per = sum(np.linalg.norm(P[(j + 1) % 3] - P[j]) for j in range(3))
        return 2 * self.area / per if per > 0 else 0.0


def boundary_value(A, P0, P1, P2):
    """A(dP) for batched triangles with vertex arrays of shape (M, 2)."""
    return A(P0, P1 - P0) + A(P1, P2 - P1) + A(P2, P0 - P2)


def triangle_distance(P, Q):
    """|P;Q| for batched triangles given as (M, 3, 2) vertex arrays in a common chart.

    Symmetric-difference area when the orientations agree, else |P| + |Q|. A
    degenerate triangle counts as having either orientation.
    """
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    sp = 0.5 * _cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    sq = 0.5 * _cross(Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 0])
    ap, aq = np.abs(sp), np.abs(sq)
    same = (np.sign(sp) * np.sign(sq)) >= 0
    out = ap + aq
    idx = np.nonzero(same & (ap > 0) & (aq > 0))[0]
    if idx.size:
        gp = shapely.polygons(P[idx])
        gq = shapely.polygons(Q[idx])
        inter = shapely.area(shapely.intersection(gp, gq))
        out[idx] = ap[idx] + aq[idx] - 2 * inter
    return out


# ---------------------------------------------------------------------------
# segment functions


class SegmentFunction:
    """Additive algebra-valued function on segments, evaluated in batches."""

    dim: int

    def __call__(self, x, v):
        raise NotImplementedError

    def at(self, seg: Segment):
        return self(np.asarray(seg.x, float)[None], np.asarray(seg.v, float)[None])[0]

    def __sub__(self, other):
        return _Combo(self, other, -1.0)

    def __add__(self, other):
        return _Combo(self, other, 1.0)

    def __rmul__(self, c):
        return _Scaled(self, float(c))


class _Combo(SegmentFunction):
    def __init__(self, f, g, s):
        self.f, self.g, self.s, self.dim = f, g, s, f.dim

    def __call__(self, x, v):
        return self.f(x, v) + self.s * self.g(x, v)


class _Scaled(SegmentFunction):
    def __init__(self, f, c):
        self.f, self.c, self.dim = f, c, f.dim

    def __call__(self, x, v):
        return self.c * self.f(x, v)


@dataclass
class LatticeGaugeField:
    """Discrete 1-form: A[i, n1, n2] is the coefficient vector of A_{i+1} at site (n1 a, n2 a)."""

    A: np.ndarray  # (2, N, N, dim)
    algebra: str = "su2"

    def __post_init__(self):
        self.A = np.asarray(self.A, float)
        if self.A.ndim != 4 or self.A.shape[0] != 2 or self.A.shape[1] != self.A.shape[2]:
            raise ValueError("lattice field must have shape (2, N, N, dim)")
        if self.A.shape[3] != get_algebra(self.algebra).dim:
            raise ValueError("last axis does not match the algebra dimension")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("lattice field has non-finite entries")

    @property
    def N(self):
        return self.A.shape[1]

    @property
    def a(self):
        return 1.0 / self.N

    @property
    def dim(self):
        return self.A.shape[3]

    @classmethod
    def zeros(cls, N, algebra="su2"):
        return cls(np.zeros((2, N, N, get_algebra(algebra).dim)), algebra)

    @classmethod
    def from_function(cls, f, N, algebra="su2"):
        """Sample a smooth form f(points (M,2)) -> (M, 2, dim) at the lattice sites."""
        n = np.arange(N) / N
        X1, X2 = np.meshgrid(n, n, indexing="ij")
        pts = np.stack([X1.ravel(), X2.ravel()], -1)
        vals = f(pts)  # (M, 2, dim)
        return cls(np.moveaxis(vals, 1, 0).reshape(2, N, N, -1), algebra)

    def copy(self):
        return LatticeGaugeField(self.A.copy(), self.algebra)

    def interpolate(self, pts):
        """Periodic bilinear interpolation at points (M, 2) -> (M, 2, dim)."""
        N = self.N
        u = (np.asarray(pts, float) * N) % N
        i0 = np.floor(u).astype(int)
        fr = u - i0
        i0 %= N
        i1 = (i0 + 1) % N
        w00 = (1 - fr[:, 0]) * (1 - fr[:, 1])
        w10 = fr[:, 0] * (1 - fr[:, 1])
        w01 = (1 - fr[:, 0]) * fr[:, 1]
        w11 = fr[:, 0] * fr[:, 1]
        A = np.moveaxis(self.A, 0, 2)  # (N, N, 2, dim)
        return (
            w00[:, None, None] * A[i0[:, 0], i0[:, 1]]
            + w10[:, None, None] * A[i1[:, 0], i0[:, 1]]
            + w01[:, None, None] * A[i0[:, 0], i1[:, 1]]
            + w11[:, None, None] * A[i1[:, 0], i1[:, 1]]
        )


class LatticeSegmentFunction(SegmentFunction):
    """Line integral of the bilinear interpolant; exact up to round-off.

    Each segment is cut where it crosses grid lines; on each piece the integrand
    is a quadratic polynomial in the parameter, which 3-point Gauss-Legendre integrates exactly.
    """

    def __init__(self, field: LatticeGaugeField):
        self.field = field
        self.dim = field.dim

    def __call__(self, x, v):
        x = np.atleast_2d(np.asarray(x, float))
        v = np.atleast_2d(np.asarray(v, float))
        x, v = np.broadcast_arrays(x, v)
        M = x.shape[0]
        a = self.field.a
        cuts = [np.zeros((M, 1)), np.ones((M, 1))]
        for r in (0, 1):
            vr, xr = v[:, r], x[:, r]
            m = int(np.ceil(np.max(np.abs(vr), initial=0.0) / a)) + 1
            k = np.arange(m)
            sgn = np.where(vr >= 0, 1.0, -1.0)
            base = np.where(vr >= 0, np.floor(xr / a) + 1, np.ceil(xr / a) - 1)
            lines = (base[:, None] + sgn[:, None] * k[None]) * a
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                t = (lines - xr[:, None]) / vr[:, None]
            t = np.where((t > 0) & (t < 1) & np.isfinite(t), t, 1.0)
            cuts.append(t)
        T = np.sort(np.concatenate(cuts, axis=1), axis=1)
        lo, hi = T[:, :-1], T[:, 1:]
        h = hi - lo  # (M, P)
        tt = lo[..., None] + h[..., None] * _CELL_X
        pts = x[:, None, None, :] + tt[..., None] * v[:, None, None, :]
        vals = self.field.interpolate(pts.reshape(-1, 2)).reshape(M, -1, 2, self.dim)
        integrand = np.einsum("mqid,mi->mqd", vals, v)  # pairing A(x) . v
        w = (h[..., None] * _CELL_W).reshape(M, -1)
        return np.einsum("mq,mqd->md", w, integrand)


def embed_lattice(A: LatticeGaugeField) -> LatticeSegmentFunction:
    """Segment function l -> int_0^1 sum_i A_i(x + t v) v_i dt of a lattice field."""
    return LatticeSegmentFunction(A)


class SmoothSegmentFunction(SegmentFunction):
    """Line integral of a smooth form f(points) -> (M, 2, dim), composite Gauss-Legendre."""

    def __init__(self, f, dim, pieces=8):
        self.f, self.dim, self.pieces = f, dim, pieces

    def __call__(self, x, v):
        x = np.atleast_2d(np.asarray(x, float))
        v = np.atleast_2d(np.asarray(v, float))
        x, v = np.broadcast_arrays(x, v)
        M = x.shape[0]
        n = self.pieces
        t = ((np.arange(n)[:, None] + _GL_X[None]) / n).ravel()
        w = np.tile(_GL_W / n, n)
        pts = x[:, None, :] + t[None, :, None] * v[:, None, :]
        vals = self.f(pts.reshape(-1, 2)).reshape(M, t.size, 2, self.dim)
        return np.einsum("q,mqid,mi->md", w, vals, v)


@dataclass
class TrigForm(SegmentFunction):
    """A_i(x) = sum_k c[i,k] cos(2 pi k.x) + s[i,k] sin(2 pi k.x) with exact segment integrals."""

    modes: np.ndarray  # (K, 2) integer wave vectors
    cos: np.ndarray  # (2, K, dim)
    sin: np.ndarray  # (2, K, dim)
    dim: int = field(init=False)

    def __post_init__(self):
        self.dim = self.cos.shape[-1]

    def values(self, pts):
        ph = 2 * pi * np.asarray(pts, float) @ self.modes.T  # (M, K)
        return np.einsum("mk,ikd->mid", np.cos(ph), self.cos) + np.einsum("mk,ikd->mid", np.sin(ph), self.sin)

    def curl(self, pts):
        """d_1 A_2 - d_2 A_1 at points."""
        ph = 2 * pi * np.asarray(pts, float) @ self.modes.T
        k1, k2 = 2 * pi * self.modes[:, 0], 2 * pi * self.modes[:, 1]
        dA2 = np.einsum("mk,kd->md", -np.sin(ph) * k1, self.cos[1]) + np.einsum("mk,kd->md", np.cos(ph) * k1, self.sin[1])
        dA1 = np.einsum("mk,kd->md", -np.sin(ph) * k2, self.cos[0]) + np.einsum("mk,kd->md", np.cos(ph) * k2, self.sin[0])
        return dA2 - dA1

    def __call__(self, x, v):
        x = np.atleast_2d(np.asarray(x, float))
        v = np.atleast_2d(np.asarray(v, float))
        ph0 = 2 * pi * x @ self.modes.T
        dph = 2 * pi * v @ self.modes.T
        small = np.abs(dph) < 1e-8
        safe = np.where(small, 1.0, dph)
        # int_0^1 cos(ph0 + t dph) dt and the sine analogue
        ic = np.where(small, np.cos(ph0 + dph / 2), (np.sin(ph0 + dph) - np.sin(ph0)) / safe)
        is_ = np.where(small, np.sin(ph0 + dph / 2), (np.cos(ph0) - np.cos(ph0 + dph)) / safe)
        pair_c = np.einsum("mi,ikd->mkd", v, self.cos)
        pair_s = np.einsum("mi,ikd->mkd", v, self.sin)
        return np.einsum("mk,mkd->md", ic, pair_c) + np.einsum("mk,mkd->md", is_, pair_s)

    def lattice(self, N, algebra="su2"):
        return LatticeGaugeField.from_function(self.values, N, algebra)


def random_trig_form(rng, alg=None, kmax=3, amplitude=1.0, decay=1.0):
    """Random trigonometric 1-form with all wave vectors in [-kmax, kmax]^2 (k != 0 up to sign)."""
    alg = alg or get_algebra()
    ks = [(k1, k2) for k1 in range(0, kmax + 1) for k2 in range(-kmax, kmax + 1) if (k1, k2) > (0, 0)]
    modes = np.array(ks, int)
    scale = amplitude / (1.0 + np.hypot(modes[:, 0], modes[:, 1])) ** decay
    c = rng.standard_normal((2, len(ks), alg.dim)) * scale[None, :, None]
    s = rng.standard_normal((2, len(ks), alg.dim)) * scale[None, :, None]
    return TrigForm(modes, c, s)


# ---------------------------------------------------------------------------
# norm estimators


@dataclass
class NormEstimate:
    value: float
    n_samples: int
    witness: tuple = ()


@dataclass
class SampleFamily:
    """Fixed structured sample of segments, segment pairs, vees and triangles.

    Base segments have dyadic lengths 2^-k, k in levels, at random positions;
    half of them are axis-parallel. Derived families are built around each base
    segment so that every estimator sees comparable geometry.
    """

    seed: int = 0
    per_level: int = 24
    levels: tuple = (2, 3, 4, 5, 6)
    depth: int = 4  # number of dyadic perturbation scales

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        xs, vs = [], []
        for k in self.levels:
            L = 2.0**-k
            x = rng.uniform(-0.5, 0.5, (self.per_level, 2))
            ang = rng.uniform(0, 2 * pi, self.per_level)
            ang[: self.per_level // 2] = (pi / 2) * rng.integers(0, 4, self.per_level // 2)
            xs.append(x)
            vs.append(L * np.stack([np.cos(ang), np.sin(ang)], -1))
        self.x = np.concatenate(xs)
        self.v = np.concatenate(vs)
        M = len(self.x)
        J = np.arange(self.depth)
        perp = np.stack([-self.v[:, 1], self.v[:, 0]], -1)

        # vees: rotate about the initial point by +-0.25 * 2^-j (never far)
        th = (0.25 * 2.0 ** -J[None, :]) * np.array([1, -1])[:, None, None]
        th = th.reshape(-1)  # (2*depth,)
        c, s = np.cos(th), np.sin(th)
        vr = np.stack(
            [c[None] * self.v[:, None, 0] - s[None] * self.v[:, None, 1], s[None] * self.v[:, None, 0] + c[None] * self.v[:, None, 1]],
            -1,
        )
        self.vee = (np.repeat(self.x, th.size, 0), np.repeat(self.v, th.size, 0), np.repeat(self.x, th.size, 0), vr.reshape(-1, 2))

        # triangles: equilateral on each side plus thin ones over the midpoint
        tris = []
        for sgn in (1, -1):
            tris.append(np.stack([self.x, self.x + self.v, self.x + 0.5 * self.v + sgn * (np.sqrt(3) / 2) * perp], 1))
            for j in J:
                h = 0.5 * 2.0**-j
                tris.append(np.stack([self.x, self.x + self.v, self.x + 0.5 * self.v + sgn * h * perp], 1))
        self.tri = np.concatenate(tris)

        # general pairs: vees, zero-length partners, parallel shifts and far partners
        pairs = [self.vee]
        pairs.append((self.x, self.v, self.x, np.zeros_like(self.v)))
        for j in J:
            d = 0.25 * 2.0**-j
            pairs.append((self.x, self.v, self.x + d * perp, self.v))
            pairs.append((self.x, self.v, self.x + d * self.v, self.v))
        perm = rng.permutation(M)
        pairs.append((self.x, self.v, self.x[perm], self.v[perm]))
        self.pairs = tuple(np.concatenate([p[i] for p in pairs]) for i in range(4))

    @property
    def n_segments(self):
        return len(self.x)


def _check_alpha(alpha):
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _best(ratio, witness_rows):
    ratio = np.where(np.isfinite(ratio), ratio, 0.0)
    j = int(np.argmax(ratio))
    return NormEstimate(float(ratio[j]), int(ratio.size), tuple(np.round(np.ravel(witness_rows[j]), 12)))


def _mag(x):
    return np.linalg.norm(x, axis=-1)


def norm_gr(A, alpha, family=None):
    """sup |A(l)| / |l|^alpha over the base segments."""
    _check_alpha(alpha)
    fam = family or SampleFamily()
    r = _mag(A(fam.x, fam.v)) / _mag(fam.v) ** alpha
    return _best(r, np.concatenate([fam.x, fam.v], 1))


def norm_alpha(A, alpha, family=None):
    """sup |A(l) - A(lbar)| / rho(l, lbar)^alpha over the sampled pairs."""
    _check_alpha(alpha)
    fam = family or SampleFamily()
    x1, v1, x2, v2 = fam.pairs
    num = _mag(A(x1, v1) - A(x2, v2))
    den = rho((x1, v1), (x2, v2))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / den**alpha, 0.0)
    return _best(r, np.concatenate([x1, v1, x2, v2], 1))


def norm_vee(A, alpha, family=None):
    """sup |A(l) - A(lbar)| / Area(l, lbar)^(alpha/2) over sampled vees."""
    _check_alpha(alpha)
    fam = family or SampleFamily()
    x1, v1, x2, v2 = fam.vee
    num = _mag(A(x1, v1) - A(x2, v2))
    den = pair_area(x1, v1, x2, v2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / den ** (alpha / 2), 0.0)
    return _best(r, np.concatenate([x1, v1, x2, v2], 1))


def norm_tri(A, alpha, family=None):
    """sup |A(dP)| / |P|^(alpha/2) over sampled triangles."""
    _check_alpha(alpha)
    fam = family or SampleFamily()
    P = fam.tri
    num = _mag(boundary_value(A, P[:, 0], P[:, 1], P[:, 2]))
    den = _tri_area(P[:, 0], P[:, 1], P[:, 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / den ** (alpha / 2), 0.0)
    return _best(r, P.reshape(len(P), -1))


NORMS = {"alpha": norm_alpha, "gr": norm_gr, "vee": norm_vee, "tri": norm_tri}


# ---------------------------------------------------------------------------
# curves


@dataclass
class CurveSpec:
    """Curve gamma: [0, 1] -> plane (a lift of the torus curve) with a partition.

    kind is 'piecewise-affine' (gamma is affine between partition points) or 'C1beta'.
    """

    gamma: object  # callable t (M,) -> (M, 2)
    kind: str = "C1beta"
    partition: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("piecewise-affine", "C1beta"):
            raise ValueError("kind must be 'piecewise-affine' or 'C1beta'")
        D = np.asarray(self.partition, float)
        if D[0] != 0.0 or D[-1] != 1.0 or np.any(np.diff(D) <= 0):
            raise ValueError("partition must increase from 0 to 1")
        for s, t in zip(D[:-1], D[1:]):
            p = self(np.linspace(s, t, 33))
            diam = np.max(np.linalg.norm(p[:, None] - p[None], axis=-1))
            if diam > MAX_LEN + 1e-12:
                raise ValueError(f"piece [{s:g}, {t:g}] has diameter {diam:.4g} > 1/4; refine the partition")

    def __call__(self, t):
        return np.asarray(self.gamma(np.asarray(t, float)), float).reshape(-1, 2)

    @property
    def closed(self):
        p = self(np.array([0.0, 1.0]))
        return bool(np.allclose(wrap(p[1] - p[0]), 0.0, atol=1e-12))

    def reversed(self):
        D = tuple(1.0 - np.asarray(self.partition)[::-1])
        return CurveSpec(lambda t: self.gamma(1.0 - np.asarray(t)), self.kind, D)

    def points(self, mesh):
        """Parameter grid refining the partition so that every chord is at most mesh long."""
        ts = [0.0]
        D = np.asarray(self.partition, float)
        for s, t in zip(D[:-1], D[1:]):
            if self.kind == "piecewise-affine":
                L = np.linalg.norm(np.diff(self(np.array([s, t])), axis=0))
            else:
                p = self(np.linspace(s, t, 65))
                L = np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1))
            n = max(1, int(np.ceil(L / mesh - 1e-12)))
            ts.extend(np.linspace(s, t, n + 1)[1:])
        return np.array(ts)


def polyline(points, closed=False):
    """Piecewise-affine curve through the given planar points, uniformly parametrised per edge."""
    P = np.asarray(points, float)
    if closed:
        P = np.vstack([P, P[:1]])
    n = len(P) - 1
    D = tuple(np.linspace(0, 1, n + 1))

    def g(t):
        t = np.clip(np.atleast_1d(t), 0, 1)
        j = np.minimum((t * n).astype(int), n - 1)
        u = t * n - j
        return P[j] + u[:, None] * (P[j + 1] - P[j])

    return CurveSpec(g, "piecewise-affine", D)


def circle(center, radius, pieces=8):
    c = np.asarray(center, float)

    def g(t):
        th = 2 * pi * np.atleast_1d(t)
        return c + radius * np.stack([np.cos(th), np.sin(th)], -1)

    return CurveSpec(g, "C1beta", tuple(np.linspace(0, 1, pieces + 1)))


def rectangle(corner, w, h):
    x0, y0 = corner
    return polyline([(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)], closed=True)


def chord_sum(A, curve, ts):
    """A(gamma^D) for the partition given by parameter values ts."""
    p = curve(ts)
    return A(p[:-1], np.diff(p, axis=0)).sum(axis=0)


def _local(curve, other, S, T, n_u):
    """|gamma; gammabar|_[s,t] = sup_u |P_sut; Pbar_sut|^(1/2) for arrays of intervals [S, T]."""
    S, T = np.atleast_1d(S).astype(float), np.atleast_1d(T).astype(float)
    frac = np.linspace(0, 1, n_u + 2)[1:-1]
    U = S[:, None] + (T - S)[:, None] * frac[None]

    def tris(c):
        ps, pt = c(S), c(T)
        pu = c(U.ravel()).reshape(len(S), n_u, 2)
        return np.stack([np.repeat(ps[:, None], n_u, 1), pu, np.repeat(pt[:, None], n_u, 1)], 2).reshape(-1, 3, 2)

    P = tris(curve)
    Q = tris(other) if other is not None else np.zeros_like(P)
    Q = Q - Q[:, :1] + P[:, :1]  # common chart
    return np.sqrt(np.max(triangle_distance(P, Q).reshape(len(S), n_u), axis=1))


def _control(curve, other, alpha, S, T, depth, n_u):
    """Dyadic lower approximation of sup over partitions of sum |.|_[a,b]^alpha, per interval."""
    S, T = np.atleast_1d(S).astype(float), np.atleast_1d(T).astype(float)
    own = _local(curve, other, S, T, n_u) ** alpha
    if depth == 0:
        return own
    M = 0.5 * (S + T)
    halves = _control(curve, other, alpha, np.concatenate([S, M]), np.concatenate([M, T]), depth - 1, n_u)
    return np.maximum(own, halves[: len(S)] + halves[len(S):])


def curve_control(curve, other=None, alpha=2 / 3, depth=5, n_u=16, partition=None):
    """|gamma; gammabar|_alpha summed over the partition (other=None means a constant path)."""
    D = np.asarray(partition if partition is not None else curve.partition, float)
    return float(np.sum(_control(curve, other, alpha, D[:-1], D[1:], depth, n_u)))


@dataclass
class CurveIntegral:
    value: np.ndarray
    error_bound: float  # Young bound at the returned level
    increment: float  # |A(gamma^D_n) - A(gamma^D_{n-1})|
    levels: int
    history: list


def young_constant(theta):
    return 2.0**theta * float(zeta(theta))


def extend_to_curve(A, curve, alpha=2 / 3, alpha_bar=0.9, tol=1e-6, n_tri=None, max_level=10, min_level=2, family=None):
    """A(gamma) as the limit of chord sums under dyadic refinement of the curve's partition.

    At every level the Young bound 2^theta zeta(theta) n_tri sum_D |gamma|_{alpha;[s,t]}^theta
    (theta = alpha_bar / alpha) is reported. Since that bound decays at best like
    n^(1 - theta) for smooth curves, refinement stops when either it or the
    increment between consecutive levels falls below tol. n_tri defaults to the
    sampled triangle norm of A at exponent alpha_bar.
    """
    if not 0 < alpha < alpha_bar <= 1:
        raise ValueError("need 0 < alpha < alpha_bar <= 1")
    D0 = np.asarray(curve.partition, float)
    if curve.kind == "piecewise-affine":
        return CurveIntegral(chord_sum(A, curve, D0), 0.0, 0.0, 0, [])
    theta = alpha_bar / alpha
    if n_tri is None:
        n_tri = norm_tri(A, alpha_bar, family).value
    K = young_constant(theta)
    history = []
    prev = None
    for level in range(max_level + 1):
        ts = np.concatenate([[0.0]] + [np.linspace(s, t, 2**level + 1)[1:] for s, t in zip(D0[:-1], D0[1:])])
        val = chord_sum(A, curve, ts)
        ctrl = _control(curve, None, alpha, ts[:-1], ts[1:], 1, 8)
        bound = K * n_tri * float(np.sum(ctrl**theta))
        inc = float(np.max(np.abs(val - prev))) if prev is not None else np.inf
        history.append((level, bound, inc))
        if level >= min_level and (bound < tol or inc < tol):
            return CurveIntegral(val, bound, inc, level, history)
        if level >= 3 and inc > 0.99 * history[-2][2]:
            raise RefinementDivergedError("chord sums stopped converging; the curve is too rough for this alpha", history)
        prev = val
    raise RefinementDivergedError(f"increment {inc:.3g} still above {tol:g} after {max_level} levels", history)
