import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ymflow.oneform import (
    NORMS,
    LatticeGaugeField,
    SampleFamily,
    Segment,
    SmoothSegmentFunction,
    Triangle,
    boundary_value,
    circle,
    embed_lattice,
    extend_to_curve,
    polyline,
    random_trig_form,
    rectangle,
    rho,
    triangle_distance,
)

coord = st.floats(-0.5, 0.5, allow_nan=False)
short = st.floats(-0.17, 0.17, allow_nan=False)


@pytest.fixture(scope="module")
def trig():
    return random_trig_form(np.random.default_rng(11), kmax=2)


@pytest.fixture(scope="module")
def lattice_fn(trig):
    return embed_lattice(trig.lattice(16))


@pytest.fixture(scope="module")
def family():
    return SampleFamily(per_level=8)


def test_segment_and_triangle_reject_long_pieces():
    with pytest.raises(ValueError, match="exceeds 1/4"):
        Segment((0, 0), (0.3, 0))
    with pytest.raises(ValueError, match="exceeds 1/4"):
        Triangle((0, 0), (0.2, 0), (0, 0.2))
    assert Triangle((0, 0), (0.1, 0), (0, 0.1)).orientation == 1


def test_triangle_inradius_equilateral():
    s = 0.1
    T = Triangle((0, 0), (s, 0), (s / 2, s * np.sqrt(3) / 2))
    assert T.inradius == pytest.approx(s / (2 * np.sqrt(3)), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(coord, coord, short, short, st.floats(0.05, 0.95))
def test_lattice_segment_function_is_additive(lattice_fn, x1, x2, v1, v2, t):
    x, v = np.array([x1, x2]), np.array([v1, v2])
    whole = lattice_fn(x, v)
    parts = lattice_fn(x, t * v) + lattice_fn(x + t * v, (1 - t) * v)
    assert np.max(np.abs(whole - parts)) <= 1e-12 * max(1.0, np.max(np.abs(whole)))


@settings(max_examples=40, deadline=None)
@given(coord, coord, short, short)
def test_lattice_segment_function_is_odd(lattice_fn, x1, x2, v1, v2):
    x, v = np.array([x1, x2]), np.array([v1, v2])
    assert np.allclose(lattice_fn(x, v), -lattice_fn(x + v, -v), atol=1e-13)


def test_trig_form_matches_quadrature(trig):
    rng = np.random.default_rng(0)
    for _ in range(5):
        x, v = rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.15, 0.15, 2)
        exact = trig(x, v)[0]
        for d in range(trig.dim):
            ref = quad(lambda s: trig.values((x + s * v)[None])[0, :, d] @ v, 0, 1, epsabs=1e-14)[0]
            assert exact[d] == pytest.approx(ref, abs=1e-12)


def test_smooth_segment_function_agrees_with_trig(trig):
    sm = SmoothSegmentFunction(trig.values, trig.dim, 4)
    rng = np.random.default_rng(1)
    x, v = rng.uniform(-0.5, 0.5, (50, 2)), rng.uniform(-0.2, 0.2, (50, 2))
    assert np.max(np.abs(sm(x, v) - trig(x, v))) < 1e-10


def test_lattice_field_validates_shape():
    with pytest.raises(ValueError):
        LatticeGaugeField(np.zeros((2, 4, 5, 3)))
    with pytest.raises(ValueError):
        LatticeGaugeField(np.zeros((2, 4, 4, 2)))
    with pytest.raises(ValueError):
        LatticeGaugeField(np.full((2, 4, 4, 3), np.nan))


@settings(max_examples=40, deadline=None)
@given(coord, coord, short, short, coord, coord, short, short)
def test_rho_is_symmetric_and_nonnegative(a, b, c, d, e, f, g, h):
    l, m = (np.array([a, b]), np.array([c, d])), (np.array([e, f]), np.array([g, h]))
    r1, r2 = rho(l, m), rho(m, l)
    assert r1 >= 0
    assert r1 == pytest.approx(r2, rel=1e-9, abs=1e-12)


def test_rho_of_segment_with_itself_is_zero():
    s = Segment((0.1, 0.2), (0.05, -0.03))
    assert rho(s, s) == pytest.approx(0.0, abs=1e-15)


def test_rho_far_segments_sum_lengths():
    l, m = Segment((0, 0), (0.1, 0)), Segment((0.3, 0.3), (0, 0.05))
    assert rho(l, m) == pytest.approx(0.15)


def test_rho_parallel_shift():
    # parallel translate by d: gaps d + d and hull area L d
    L, d = 0.2, 0.01
    l, m = Segment((0, 0), (L, 0)), Segment((0, d), (L, 0))
    assert rho(l, m) == pytest.approx(2 * d + np.sqrt(L * d), rel=1e-12)


def _tri(P):
    return np.asarray(P, float)[None]


def test_triangle_distance_nested_homothety():
    P = np.array([[0, 0], [0.1, 0], [0.02, 0.08]])
    for s in (0.25, 0.5, 0.9):
        Q = s * P
        u, w = P[1] - P[0], P[2] - P[0]
        area = 0.5 * abs(u[0] * w[1] - u[1] * w[0])
        assert triangle_distance(_tri(P), _tri(Q))[0] == pytest.approx(area * (1 - s**2), rel=1e-10)


def test_triangle_distance_opposite_orientation_adds_areas():
    P = np.array([[0, 0], [0.1, 0], [0, 0.1]])
    Q = P[::-1]
    assert triangle_distance(_tri(P), _tri(Q))[0] == pytest.approx(0.01)


@settings(max_examples=40, deadline=None)
@given(st.lists(short, min_size=12, max_size=12))
def test_triangle_distance_symmetric(vals):
    v = np.array(vals).reshape(2, 3, 2)
    d1 = triangle_distance(v[:1], v[1:])[0]
    d2 = triangle_distance(v[1:], v[:1])[0]
    assert d1 >= -1e-15
    assert d1 == pytest.approx(d2, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.2), st.floats(0.05, 0.2))
def test_boundary_value_of_constant_form_vanishes(w, h):
    c = np.array([0.3, -1.0, 2.0])
    const = SmoothSegmentFunction(lambda p: np.broadcast_to(np.stack([c, 2 * c]), (len(p), 2, 3)), 3, 1)
    P0, P1, P2 = (np.array([[0.0, 0.0]]), np.array([[w, 0.0]]), np.array([[0.0, h]]))
    assert np.max(np.abs(boundary_value(const, P0, P1, P2))) < 1e-14


@pytest.mark.parametrize("name", sorted(NORMS))
def test_norms_homogeneous(trig, family, name):
    A = embed_lattice(trig.lattice(16))
    n1 = NORMS[name](A, 0.75, family).value
    n3 = NORMS[name](3.0 * A, 0.75, family).value
    assert n1 > 0
    assert n3 == pytest.approx(3 * n1, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
def test_norms_reject_bad_alpha(trig, family, alpha):
    for f in NORMS.values():
        with pytest.raises(ValueError, match="alpha"):
            f(trig, alpha, family)


def test_norm_of_zero_field_is_zero(family):
    Z = embed_lattice(LatticeGaugeField.zeros(8))
    assert all(NORMS[n](Z, 0.5, family).value == 0 for n in NORMS)


def test_polyline_integral_is_exact_chord_sum(trig):
    loop = rectangle((0.1, 0.05), 0.2, 0.15)
    res = extend_to_curve(trig, loop)
    P = np.array([(0.1, 0.05), (0.3, 0.05), (0.3, 0.2), (0.1, 0.2), (0.1, 0.05)])
    ref = trig(P[:-1], np.diff(P, axis=0)).sum(0)
    assert np.allclose(res.value, ref, atol=1e-14)
    assert res.error_bound == 0.0


def test_smooth_curve_limit_matches_line_integral(trig):
    c = circle((0.0, 0.0), 0.1)
    res = extend_to_curve(trig, c, tol=1e-8, max_level=12)

    def integrand(t, d):
        th = 2 * np.pi * t
        p = 0.1 * np.array([np.cos(th), np.sin(th)])
        dp = 0.2 * np.pi * np.array([-np.sin(th), np.cos(th)])
        return trig.values(p[None])[0, :, d] @ dp

    ref = np.array([quad(integrand, 0, 1, args=(d,), limit=200, epsabs=1e-13)[0] for d in range(trig.dim)])
    assert np.max(np.abs(res.value - ref)) < 1e-7


def test_curve_partition_checks():
    with pytest.raises(ValueError, match="refine the partition"):
        polyline([(0, 0), (0.3, 0)])
    assert rectangle((0, 0), 0.1, 0.1).closed
    assert not polyline([(0, 0), (0.1, 0)]).closed


def test_extend_to_curve_rejects_bad_exponents(trig):
    with pytest.raises(ValueError):
        extend_to_curve(trig, circle((0, 0), 0.1), alpha=0.9, alpha_bar=0.8)
