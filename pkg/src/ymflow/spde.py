"""Lattice solvers for the renormalised Yang-Mills heat flow, its gauge-transformed systems and the DeTurck check.

All steps are semi-implicit Euler: the Laplacian is inverted exactly in Fourier space
(symbol |2 pi k|^2), everything else is explicit with central differences. Fields are
stored as coefficient arrays (2, N, N, dim); gauge transformations as unitary matrices
(N, N, n, n) that are only ever multiplied by exact group exponentials.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gauge import GaugeTransform
from .lie import Ad_matrix, get_algebra
from .oneform import LatticeGaugeField

STABILITY = 1.0  # dt <= STABILITY * a^2 (explicit g-equation with the 2a-wide central stencil)
DEFAULT_BLOWUP = 1e6


class BlowUpError(RuntimeError):
    """Raised when a field leaves the finite region; carries the time stamp of detection."""

    def __init__(self, t, step, magnitude):
        super().__init__(f"blow-up at t = {t:.6g} (step {step}): max |field| = {magnitude:.3g}")
        self.t, self.step, self.magnitude = t, step, magnitude


class StabilityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# discrete operators


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def central(f, j, a):
    """Central difference along spatial axis j of an array whose first two axes are the grid."""
    return (np.roll(f, -1, axis=j) - np.roll(f, 1, axis=j)) / (2 * a)


def heat_factor(N, dt):
    """Fourier multiplier of (1 - dt Laplace)^-1 on the N x N torus grid."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    lam = (2 * np.pi) ** 2 * (k[:, None] ** 2 + k[None, :] ** 2)
    return 1.0 / (1.0 + dt * lam)


def implicit_heat(X, fac):
    """Apply (1 - dt Laplace)^-1 to X with grid axes (0, 1)."""
    shape = fac.shape + (1,) * (X.ndim - 2)
    return np.real(np.fft.ifft2(np.fft.fft2(X, axes=(0, 1)) * fac.reshape(shape), axes=(0, 1)))


def _implicit_form(A, fac):
    return np.stack([implicit_heat(A[i], fac) for i in range(2)])


def laplacian(X, N):
    """Spectral Laplacian of X with grid axes (0, 1)."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    lam = (2 * np.pi) ** 2 * (k[:, None] ** 2 + k[None, :] ** 2)
    shape = lam.shape + (1,) * (X.ndim - 2)
    return np.real(np.fft.ifft2(-np.fft.fft2(X, axes=(0, 1)) * lam.reshape(shape), axes=(0, 1)))


def ym_nonlinearity(A, alg, a):
    """sum_j [A_j, 2 d_j A_i - d_i A_j + [A_j, A_i]] for i = 1, 2."""
    br = alg.bracket
    dA = [[central(A[i], j, a) for i in range(2)] for j in range(2)]  # dA[j][i] = d_j A_i
    out = np.zeros_like(A)
    for i in range(2):
        for j in range(2):
            out[i] += br(A[j], 2 * dA[j][i] - dA[i][j] + br(A[j], A[i]))
    return out


def dg_ginv(g, a, alg):
    """h_j = (d_j g) g^-1 projected onto the algebra, shape (2, N, N, dim)."""
    gi = _dagger(g)
    return np.stack([alg.from_matrix(central(g, j, a) @ gi) for j in range(2)])


def g_rhs(g, B, a, alg, h=None):
    """(d_t g) g^-1 = d_j h_j + [B_j, h_j]."""
    h = dg_ginv(g, a, alg) if h is None else h
    return central(h[0], 0, a) + central(h[1], 1, a) + alg.bracket(B[0], h[0]) + alg.bracket(B[1], h[1])


def group_exp(X, alg):
    """exp of algebra coefficients (..., dim) via the Hermitian eigendecomposition; unitary to round-off."""
    H = -1j * alg.to_matrix(X)
    if H.shape[-1] == 2 and alg.simple:
        # traceless 2 x 2: H^2 = r^2 I, exp(iH) = cos r + i sin(r)/r H
        r = np.sqrt(np.maximum(np.real(-np.linalg.det(H)), 0.0))[..., None, None]
        sinc = np.sinc(r / np.pi)
        return np.cos(r) * np.eye(2) + 1j * sinc * H
    H = 0.5 * (H + _dagger(H))
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)[..., None, :]) @ _dagger(V)


def _is_identity(g):
    n = g.shape[-1]
    return bool(np.array_equal(g, np.broadcast_to(np.eye(n, dtype=g.dtype), g.shape)))


def conjugate(g, X, alg):
    """Ad_g applied to each component of X (2, N, N, dim); exact pass-through when g is the identity."""
    if _is_identity(g):
        return X
    gm = g[None]
    return alg.from_matrix(gm @ alg.to_matrix(X) @ _dagger(gm))


def gauge_action(A, g, a, alg):
    """A^g = Ad_g A - (dg) g^-1 with central differences (the discretisation used by the B-system)."""
    return conjugate(g, A, alg) - dg_ginv(g, a, alg)


def derive_Uh(g, a, alg):
    """(h, U) = ((dg) g^-1, Ad_g)."""
    return dg_ginv(g, a, alg), Ad_matrix(g, alg)


def _check(X, t, step, threshold):
    m = float(np.max(np.abs(X))) if X.size else 0.0
    if not np.isfinite(m) or m > threshold:
        raise BlowUpError(t, step, m)
    return X


def _check_dt(dt, N):
    if dt <= 0 or dt > STABILITY / N**2:
        raise StabilityError(f"dt = {dt:.3g} outside (0, {STABILITY / N**2:.3g}] for N = {N}")


# ---------------------------------------------------------------------------
# states


@dataclass
class SymState:
    A: LatticeGaugeField
    t: float = 0.0
    eps: float = 0.0
    dt: float = 0.0
    C: float = 0.0
    step: int = 0

    def __post_init__(self):
        if not self.dt:
            self.dt = self.A.a**2 / 4
        _check_dt(self.dt, self.A.N)

    @property
    def N(self):
        return self.A.N

    @property
    def alg(self):
        return get_algebra(self.A.algebra)


@dataclass
class CoupledState:
    """(B or Abar, g) and optionally (h, U); g_history keeps the recent g for noise conjugation."""

    B: LatticeGaugeField
    g: GaugeTransform
    t: float = 0.0
    eps: float = 0.0
    dt: float = 0.0
    C: float = 0.0
    step: int = 0
    h: np.ndarray | None = None  # (2, N, N, dim)
    U: np.ndarray | None = None  # (N, N, dim, dim)
    g_history: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt:
            self.dt = self.B.a**2 / 4
        _check_dt(self.dt, self.B.N)
        if self.g.N != self.B.N:
            raise ValueError("g and B live on different grids")

    @property
    def N(self):
        return self.B.N

    @property
    def alg(self):
        return get_algebra(self.B.algebra)

    def with_Uh(self):
        h, U = derive_Uh(self.g.g, self.B.a, self.alg)
        return _replace(self, h=h, U=U)

    def orthogonality_residual(self):
        if self.U is None:
            return 0.0
        eye = np.eye(self.U.shape[-1])
        return float(np.max(np.abs(np.swapaxes(self.U, -1, -2) @ self.U - eye)))

    def unitarity_residual(self):
        g = self.g.g
        return float(np.max(np.abs(g @ _dagger(g) - np.eye(g.shape[-1]))))


def _replace(s, **kw):
    d = dict(s.__dict__)
    d.update(kw)
    return type(s)(**d)


def _new_gauge(g, algebra):
    # GaugeTransform re-checks unitarity; bypass the costly constructor check inside loops
    out = object.__new__(GaugeTransform)
    out.g, out.algebra, out.phi, out._logs = g, algebra, None, None
    return out


# ---------------------------------------------------------------------------
# steps


def step_sym(s: SymState, noise=None, blowup=DEFAULT_BLOWUP) -> SymState:
    """One IMEX step of d_t A_i = Laplace A_i + xi_i + C A_i + [A_j, 2 d_j A_i - d_i A_j + [A_j, A_i]].

    noise is the mollified noise density at this step, shape (2, N, N, dim), or None.
    """
    alg, a, A = s.alg, s.A.a, s.A.A
    rhs = ym_nonlinearity(A, alg, a) + s.C * A
    if noise is not None:
        rhs = rhs + noise
    new = _implicit_form(A + s.dt * rhs, heat_factor(s.N, s.dt))
    t = s.t + s.dt
    _check(new, t, s.step + 1, blowup)
    return SymState(LatticeGaugeField(new, s.A.algebra), t, s.eps, s.dt, s.C, s.step + 1)


def _advance_g(g, R, dt, alg):
    if not np.any(R):
        return g
    return group_exp(dt * R, alg) @ g


def step_coupled_Bg(s: CoupledState, noise=None, blowup=DEFAULT_BLOWUP) -> CoupledState:
    """One step of the B-system: noise enters as g xi g^-1 and the counterterm as C B + C (dg) g^-1.

    g moves by g <- exp(dt ((d_t g) g^-1)) g. With g = 1 this is step_sym bit for bit.
    """
    alg, a, B, g = s.alg, s.B.a, s.B.A, s.g.g
    h = dg_ginv(g, a, alg)
    rhs = ym_nonlinearity(B, alg, a) + s.C * B
    if noise is not None:
        rhs = rhs + conjugate(g, noise, alg)
    rhs = rhs + s.C * h
    R = g_rhs(g, B, a, alg, h)
    newB = _implicit_form(B + s.dt * rhs, heat_factor(s.N, s.dt))
    newg = _advance_g(g, R, s.dt, alg)
    t = s.t + s.dt
    _check(newB, t, s.step + 1, blowup)
    _check(R, t, s.step + 1, blowup / s.dt)
    return _replace(s, B=LatticeGaugeField(newB, s.B.algebra), g=_new_gauge(newg, s.g.algebra), t=t, step=s.step + 1)


def conjugated_mollified_noise(source, history, n, alg):
    """sum_m c_m dt chi_x * (gbar(n - m) xi(n - m) gbar(n - m)^-1), gbar = 1 before step 0.

    source provides white(n), smooth(xi), _smoothed(n), lags, weights and dt (see she.MollifiedNoise).
    """
    if np.any(np.asarray(source.lags) < 0):
        raise ValueError("conjugating before mollification needs a non-anticipative mollifier (lags >= 0)")
    out = 0.0
    for m, w in zip(source.lags, source.weights):
        k = n - int(m)
        g = history.get(k) if k >= 0 else None
        if g is None or _is_identity(g):
            if k >= 0 and g is None:
                raise KeyError(f"g at step {k} is not in the history")
            sm = source._smoothed(k)
        else:
            sm = source.smooth(conjugate(g, source.white(k), alg))
        out = out + (w * source.dt) * sm
    return out


def step_coupled_barA(s: CoupledState, source=None, Cbar=0.0, blowup=DEFAULT_BLOWUP) -> CoupledState:
    """One step of the Abar-system: chi^eps * (gbar xi gbar^-1) + C Abar + (C - Cbar)(d gbar) gbar^-1."""
    alg, a, A, g = s.alg, s.B.a, s.B.A, s.g.g
    hist = dict(s.g_history)
    hist[s.step] = g
    h = dg_ginv(g, a, alg)
    rhs = ym_nonlinearity(A, alg, a) + s.C * A
    if source is not None:
        rhs = rhs + conjugated_mollified_noise(source, hist, s.step, alg)
        keep = s.step - int(np.max(source.lags))
        hist = {k: v for k, v in hist.items() if k >= keep + 1}
    rhs = rhs + (s.C - Cbar) * h
    R = g_rhs(g, A, a, alg, h)
    newA = _implicit_form(A + s.dt * rhs, heat_factor(s.N, s.dt))
    newg = _advance_g(g, R, s.dt, alg)
    t = s.t + s.dt
    _check(newA, t, s.step + 1, blowup)
    return _replace(
        s, B=LatticeGaugeField(newA, s.B.algebra), g=_new_gauge(newg, s.g.algebra), t=t, step=s.step + 1, g_history=hist
    )


def step_g(s: CoupledState, blowup=DEFAULT_BLOWUP) -> CoupledState:
    """Advance g alone with B frozen."""
    R = g_rhs(s.g.g, s.B.A, s.B.a, s.alg)
    _check(R, s.t + s.dt, s.step + 1, blowup / s.dt)
    return _replace(s, g=_new_gauge(_advance_g(s.g.g, R, s.dt, s.alg), s.g.algebra), t=s.t + s.dt, step=s.step + 1)


def step_Uh(s: CoupledState, blowup=DEFAULT_BLOWUP) -> CoupledState:
    """One IMEX step of the (h, U) system with B frozen:

    d_t h_i = Laplace h_i - [h_j, d_j h_i] + [[B_j, h_j], h_i] + d_i [B_j, h_j]
    d_t U   = Laplace U - [h_j, [h_j, .]] U + [[B_j, h_j], .] U
    """
    if s.h is None or s.U is None:
        s = s.with_Uh()
    alg, a, B, h, U = s.alg, s.B.a, s.B.A, s.h, s.U
    br = alg.bracket
    m = br(B[0], h[0]) + br(B[1], h[1])
    rh = np.stack(
        [
            -br(h[0], central(h[i], 0, a)) - br(h[1], central(h[i], 1, a)) + br(m, h[i]) + central(m, i, a)
            for i in range(2)
        ]
    )
    ad0, ad1, adm = alg.ad(h[0]), alg.ad(h[1]), alg.ad(m)
    rU = -(ad0 @ (ad0 @ U)) - (ad1 @ (ad1 @ U)) + adm @ U
    fac = heat_factor(s.N, s.dt)
    newh = _implicit_form(h + s.dt * rh, fac)
    newU = implicit_heat(U + s.dt * rU, fac)
    t = s.t + s.dt
    _check(newh, t, s.step + 1, blowup)
    _check(newU, t, s.step + 1, blowup)
    return _replace(s, h=newh, U=newU, t=t, step=s.step + 1)


# ---------------------------------------------------------------------------
# DeTurck consistency


def _grid_points(N):
    n = np.arange(N) / N
    X1, X2 = np.meshgrid(n, n, indexing="ij")
    return np.stack([X1.ravel(), X2.ravel()], -1)


def _lattice(f, N):
    """Sample f(points) -> (M, 2, dim) on the grid as (2, N, N, dim)."""
    return np.moveaxis(f(_grid_points(N)), 1, 0).reshape(2, N, N, -1)


@dataclass
class DeTurckReport:
    N: int
    dt: float
    T: float
    t_reached: float
    steps: int
    gap: float  # sup |A^g - B| at t_reached
    g_gap: float  # sup |g_A - g_B|
    blowup: dict | None = None


def deturck_consistency(A0, g0, smooth_noise, T, N, dt=None, C=0.0, algebra="su2", blowup=DEFAULT_BLOWUP):
    """Solve the A-equation together with the g-equation driven by A^g, and separately the B-system.

    A0(points) -> (M, 2, dim) and g0(points) -> (M, dim) (g(0) = exp g0) are smooth;
    smooth_noise(t, points) -> (M, 2, dim) is a deterministic forcing (or None).
    Returns the sup-norm gap between A^g and B at time T (or at blow-up).
    """
    alg = get_algebra(algebra)
    a = 1.0 / N
    dt = dt or a * a / 4
    _check_dt(dt, N)
    n_steps = int(round(T / dt))
    A = _lattice(A0, N)
    g = group_exp(g0(_grid_points(N)).reshape(N, N, -1), alg)
    gA, gB = g.copy(), g.copy()
    B = gauge_action(A, g, a, alg)
    fac = heat_factor(N, dt)
    pts = _grid_points(N)
    rec, t, k = None, 0.0, 0
    try:
        for k in range(n_steps):
            f = None if smooth_noise is None else np.moveaxis(smooth_noise(t, pts), 1, 0).reshape(2, N, N, -1)
            # A-route
            Ag = gauge_action(A, gA, a, alg)
            rA = ym_nonlinearity(A, alg, a) + C * A
            if f is not None:
                rA = rA + f
            RA = g_rhs(gA, Ag, a, alg)
            # B-route
            h = dg_ginv(gB, a, alg)
            rB = ym_nonlinearity(B, alg, a) + C * B
            if f is not None:
                rB = rB + conjugate(gB, f, alg)
            rB = rB + C * h
            RB = g_rhs(gB, B, a, alg, h)
            A = _implicit_form(A + dt * rA, fac)
            B = _implicit_form(B + dt * rB, fac)
            gA = _advance_g(gA, RA, dt, alg)
            gB = _advance_g(gB, RB, dt, alg)
            t = (k + 1) * dt
            _check(A, t, k + 1, blowup)
            _check(B, t, k + 1, blowup)
        k = n_steps
    except BlowUpError as e:
        rec = {"t": e.t, "step": e.step, "magnitude": e.magnitude}
        t = e.t - dt
    gap = float(np.max(np.abs(gauge_action(A, gA, a, alg) - B)))
    return DeTurckReport(N, dt, T, t, k, gap, float(np.max(np.abs(gA - gB))), rec)


@dataclass
class ConvergenceStudy:
    Ns: tuple
    gaps: list
    orders: list  # log2 of successive gap ratios
    min_order: float


def smooth_deturck_data(seed=0, algebra="su2", amplitude=0.3):
    """Smooth trigonometric initial data, gauge generator and time-modulated forcing."""
    from .oneform import random_trig_form

    alg = get_algebra(algebra)
    rng = np.random.default_rng(seed)
    A0 = random_trig_form(rng, alg, kmax=2, amplitude=amplitude)
    phi = random_trig_form(rng, alg, kmax=1, amplitude=amplitude)
    F = random_trig_form(rng, alg, kmax=2, amplitude=1.0)

    def g0(pts):
        return phi.values(pts)[:, 0]

    def forcing(t, pts):
        return np.cos(2 * np.pi * t / 0.05) * F.values(pts)

    return A0.values, g0, forcing


def deturck_convergence(Ns=(32, 64, 128), T=0.01, seed=0, algebra="su2", C=0.0):
    A0, g0, forcing = smooth_deturck_data(seed, algebra)
    gaps = [deturck_consistency(A0, g0, forcing, T, N, C=C, algebra=algebra).gap for N in Ns]
    orders = [float(np.log2(gaps[i] / gaps[i + 1])) for i in range(len(gaps) - 1)]
    return ConvergenceStudy(tuple(Ns), gaps, orders, min(orders))


# ---------------------------------------------------------------------------
# runs


def curvature(A, alg, a):
    """F_12 = d_1 A_2 - d_2 A_1 + [A_1, A_2] at the sites."""
    return central(A[1], 0, a) - central(A[0], 1, a) + alg.bracket(A[0], A[1])


OBSERVABLES = {
    "l2_norm": lambda A, alg, a: float(np.sqrt(np.sum(A**2) * a * a)),
    "max_abs": lambda A, alg, a: float(np.max(np.abs(A))),
    "curvature_l2": lambda A, alg, a: float(np.sqrt(np.sum(curvature(A, alg, a) ** 2) * a * a)),
}


@dataclass
class RunResult:
    times: list
    observables: dict
    trajectory: list  # (t, field array) snapshots
    final: SymState
    blowup: dict | None = None


def run_sym(state: SymState, T, noise=None, observables=("l2_norm",), record_every=1, blowup=DEFAULT_BLOWUP):
    """Iterate step_sym up to time T; noise is a callable step -> array or None.

    observables: names from OBSERVABLES or a mapping name -> f(A, alg, a).

    Blow-up ends the run early and is reported, the trajectory so far is kept.
    """
    if not isinstance(observables, dict):
        for name in observables:
            if name not in OBSERVABLES:
                raise KeyError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}")
        observables = {k: OBSERVABLES[k] for k in observables}
    alg, a = state.alg, state.A.a
    n_steps = int(round(T / state.dt))
    times, traj = [], []
    obs = {k: [] for k in observables}

    def record(s):
        times.append(s.t)
        traj.append((s.t, s.A.A.copy()))
        for k in observables:
            obs[k].append(observables[k](s.A.A, alg, a))

    record(state)
    rec = None
    for n in range(n_steps):
        try:
            state = step_sym(state, None if noise is None else noise(n), blowup)
        except BlowUpError as e:
            rec = {"t": e.t, "step": e.step, "magnitude": e.magnitude}
            break
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            record(state)
    return RunResult(times, obs, traj, state, rec)
