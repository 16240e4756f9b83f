import numpy as np
import pytest

from ymflow.gauge import GaugeTransform
from ymflow.lie import get_algebra, random_group
from ymflow.mollifier import MollifierSpec
from ymflow.oneform import LatticeGaugeField, random_trig_form
from ymflow.she import MollifiedNoise
from ymflow.spde import (
    BlowUpError,
    CoupledState,
    StabilityError,
    SymState,
    conjugate,
    curvature,
    deturck_consistency,
    deturck_convergence,
    group_exp,
    run_sym,
    smooth_deturck_data,
    step_coupled_barA,
    step_coupled_Bg,
    step_g,
    step_sym,
    step_Uh,
    ym_nonlinearity,
)


def trig_field(N, seed=0, amplitude=0.3, algebra="su2"):
    alg = get_algebra(algebra)
    return LatticeGaugeField(random_trig_form(np.random.default_rng(seed), alg, kmax=2, amplitude=amplitude).lattice(N, algebra).A, algebra)


def smooth_gauge(N, seed=7, amplitude=0.3):
    ph = random_trig_form(np.random.default_rng(seed), kmax=1, amplitude=amplitude)
    return GaugeTransform.from_function(lambda p: ph.values(p)[:, 0, :], N)


def test_zero_field_stays_zero():
    s = SymState(LatticeGaugeField.zeros(16), C=3.0)
    for _ in range(5):
        s = step_sym(s)
    assert not np.any(s.A.A)
    assert s.step == 5 and s.t == pytest.approx(5 * s.dt)


def test_abelian_heat_mode_converges_first_order():
    # one Fourier mode of the abelian equation decays like exp(-|2 pi k|^2 t)
    T, errs = 0.01, []
    for N in (8,):
        for dt in (T / 20, T / 40, T / 80):
            x = np.arange(N) / N
            mode = np.cos(2 * np.pi * (x[:, None] + 0 * x[None, :]))
            A = np.zeros((2, N, N, 1))
            A[1, ..., 0] = mode
            s = SymState(LatticeGaugeField(A, "abelian-test"), dt=dt)
            for _ in range(int(round(T / dt))):
                s = step_sym(s)
            exact = np.exp(-((2 * np.pi) ** 2) * T) * mode
            errs.append(np.max(np.abs(s.A.A[1, ..., 0] - exact)))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.1)


def test_mass_term_on_constant_mode():
    N, C, dt = 8, 2.0, 1e-3
    A = np.zeros((2, N, N, 1))
    A[0] = 1.0
    s = SymState(LatticeGaugeField(A, "abelian-test"), dt=dt, C=C)
    for _ in range(10):
        s = step_sym(s)
    assert np.allclose(s.A.A[0], (1 + C * dt) ** 10, rtol=1e-13)


def test_nonlinearity_is_equivariant_under_constant_adjoint():
    alg = get_algebra("su2")
    A = trig_field(16).A
    g = np.broadcast_to(random_group(np.random.default_rng(2), alg), (16, 16, 2, 2))
    lhs = ym_nonlinearity(conjugate(g, A, alg), alg, 1 / 16)
    rhs = conjugate(g, ym_nonlinearity(A, alg, 1 / 16), alg)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_group_exp_unitary_and_matches_generic_path():
    su2, su3 = get_algebra("su2"), get_algebra("su3")
    X = np.random.default_rng(0).standard_normal((50, 3))
    U = group_exp(X, su2)
    assert np.max(np.abs(U @ np.conj(np.swapaxes(U, -1, -2)) - np.eye(2))) < 1e-14
    from scipy.linalg import expm

    assert np.allclose(U[7], expm(su2.to_matrix(X[7])), atol=1e-13)
    Y = np.random.default_rng(1).standard_normal((4, 8))
    assert np.allclose(group_exp(Y, su3)[2], expm(su3.to_matrix(Y[2])), atol=1e-12)


def test_stability_limit_enforced():
    with pytest.raises(StabilityError):
        SymState(LatticeGaugeField.zeros(16), dt=2.0 / 16**2)
    with pytest.raises(StabilityError):
        CoupledState(LatticeGaugeField.zeros(16), GaugeTransform.identity(16), dt=-1.0)


def test_coupled_state_grid_mismatch():
    with pytest.raises(ValueError, match="different grids"):
        CoupledState(LatticeGaugeField.zeros(16), GaugeTransform.identity(8))


def test_B_system_with_identity_gauge_is_sym_bit_for_bit():
    N = 16
    A = trig_field(N)
    src = MollifiedNoise(1, 1.0, MollifierSpec(), N, (1 / N) ** 2 / 4)
    s = SymState(A, C=0.7)
    c = CoupledState(A, GaugeTransform.identity(N), C=0.7)
    for n in range(6):
        xi = src(n)
        s = step_sym(s, xi)
        c = step_coupled_Bg(c, xi)
    assert np.array_equal(s.A.A, c.B.A)
    assert np.array_equal(c.g.g, GaugeTransform.identity(N).g)


def test_Abar_system_with_identity_gauge_is_sym_bit_for_bit():
    N = 16
    A = trig_field(N)
    src = MollifiedNoise(1, 1.0, MollifierSpec("nonanticipative"), N, (1 / N) ** 2 / 4)
    s = SymState(A, C=0.7)
    c = CoupledState(A, GaugeTransform.identity(N), C=0.7)
    for n in range(6):
        s = step_sym(s, src(n))
        c = step_coupled_barA(c, src, Cbar=0.0)
    assert np.array_equal(s.A.A, c.B.A)
    assert max(c.g_history) == 5 and len(c.g_history) <= len(src.lags)


def test_Abar_system_needs_non_anticipative_mollifier():
    N = 16
    src = MollifiedNoise(1, 1.0, MollifierSpec("symmetric"), N, (1 / N) ** 2 / 4)
    c = CoupledState(trig_field(N), smooth_gauge(N))
    with pytest.raises(ValueError, match="non-anticipative"):
        step_coupled_barA(c, src)


def test_constant_gauge_rotates_the_solution():
    N, alg = 16, get_algebra("su2")
    g0 = random_group(np.random.default_rng(4), alg)
    gconst = GaugeTransform.constant(g0, N)
    A = trig_field(N)
    src = MollifiedNoise(2, 1.0, MollifierSpec(), N, (1 / N) ** 2 / 4)
    s = SymState(A, C=0.3)
    B0 = LatticeGaugeField(conjugate(gconst.g, A.A, alg))
    c = CoupledState(B0, gconst, C=0.3)
    for n in range(5):
        xi = src(n)
        s = step_sym(s, xi)
        c = step_coupled_Bg(c, xi)
    assert np.max(np.abs(conjugate(gconst.g, s.A.A, alg) - c.B.A)) < 1e-12
    assert np.array_equal(c.g.g, gconst.g)


def test_gauge_stays_unitary():
    N = 16
    c = CoupledState(trig_field(N), smooth_gauge(N))
    for _ in range(20):
        c = step_coupled_Bg(c)
    assert c.unitarity_residual() < 1e-12
    assert not np.allclose(c.g.g, smooth_gauge(N).g)


def test_derived_U_is_orthogonal():
    N = 16
    c = CoupledState(trig_field(N), smooth_gauge(N)).with_Uh()
    assert c.orthogonality_residual() < 1e-12
    assert c.h.shape == (2, N, N, 3) and c.U.shape == (N, N, 3, 3)


def test_Uh_stationary_for_constant_gauge_and_zero_field():
    N = 16
    g = GaugeTransform.constant(random_group(np.random.default_rng(0), get_algebra("su2")), N)
    c = CoupledState(LatticeGaugeField.zeros(N), g).with_Uh()
    U0 = c.U.copy()
    for _ in range(5):
        c = step_Uh(c)
    assert np.max(np.abs(c.h)) < 1e-15
    assert np.max(np.abs(c.U - U0)) < 1e-13


def test_Uh_tracks_derived_values_under_joint_refinement():
    # (h, U) evolved directly vs (dg g^-1, Ad_g) from g evolved with B frozen
    T, gaps = 0.004, []
    for N in (16, 32):
        c0 = CoupledState(trig_field(N), smooth_gauge(N)).with_Uh()
        cg, cu = c0, c0
        for _ in range(int(round(T / c0.dt))):
            cg = step_g(cg)
            cu = step_Uh(cu)
        h, U = cg.with_Uh().h, cg.with_Uh().U
        gaps.append(max(np.max(np.abs(cu.h - h)), np.max(np.abs(cu.U - U))))
    assert gaps[1] < gaps[0] / 2


def test_deturck_gap_vanishes_for_trivial_gauge():
    A0, _, forcing = smooth_deturck_data(0)
    rep = deturck_consistency(A0, lambda p: np.zeros((len(p), 3)), forcing, 0.002, 16, C=0.5)
    assert rep.gap == 0.0 and rep.g_gap == 0.0
    assert rep.blowup is None and rep.steps == int(round(0.002 / rep.dt))


def test_deturck_gap_converges():
    st = deturck_convergence(Ns=(16, 32), T=0.002)
    assert st.gaps[0] > st.gaps[1] > 0
    assert st.min_order >= 1.0


def test_blowup_detected_and_trajectory_kept():
    s = SymState(trig_field(16, amplitude=3.0))
    with pytest.raises(BlowUpError) as info:
        step_sym(s, blowup=1e-3)
    assert info.value.step == 1
    res = run_sym(s, 10 * s.dt, observables=("l2_norm", "max_abs"), blowup=5.0)
    assert res.blowup is not None
    assert len(res.times) == len(res.observables["l2_norm"]) >= 1


def test_run_sym_records_and_validates():
    s = SymState(trig_field(16))
    res = run_sym(s, 6 * s.dt, observables=("l2_norm", "curvature_l2"), record_every=2)
    assert len(res.times) == 4
    assert res.blowup is None
    with pytest.raises(KeyError):
        run_sym(s, s.dt, observables=("energy",))
    custom = run_sym(s, s.dt, observables={"mean": lambda A, alg, a: float(A.mean())})
    assert list(custom.observables) == ["mean"]


def test_curvature_of_abelian_pure_gauge_vanishes():
    N = 16
    x = np.arange(N) / N
    phi = np.sin(2 * np.pi * x)[:, None] * np.cos(2 * np.pi * x)[None, :]
    a = 1 / N
    from ymflow.spde import central

    A = np.stack([central(phi, 0, a), central(phi, 1, a)])[..., None]
    assert np.max(np.abs(curvature(A, get_algebra("abelian-test"), a))) < 1e-12
