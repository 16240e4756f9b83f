import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ymflow.gauge import (
    GaugedSegmentFunction,
    GaugeTransform,
    NotGaugeEquivalentError,
    apply_gauge,
    holonomy,
    holonomy_covariance_residual,
    orbit_distance_bounds,
    recover_gauge,
    wilson_loop,
)
from ymflow.gauge import K_distance
from ymflow.lie import Ad, get_algebra, random_group
from ymflow.oneform import LatticeGaugeField, SampleFamily, circle, embed_lattice, polyline, random_trig_form, rectangle


@pytest.fixture(scope="module")
def alg():
    return get_algebra("su2")


@pytest.fixture(scope="module")
def field32():
    return random_trig_form(np.random.default_rng(3), kmax=2, amplitude=0.2).lattice(32)


@pytest.fixture(scope="module")
def gauge32():
    ph = random_trig_form(np.random.default_rng(7), kmax=1, amplitude=0.2)
    return GaugeTransform.from_function(lambda p: ph.values(p)[:, 0, :], 32)


def test_identity_gauge_is_exact_noop(field32):
    out = apply_gauge(field32, GaugeTransform.identity(32))
    assert np.array_equal(out.A, field32.A)
    A = embed_lattice(field32)
    x, v = np.array([[0.1, 0.2]]), np.array([[0.05, 0.01]])
    assert np.allclose(GaugedSegmentFunction(A, GaugeTransform.identity(32))(x, v), A(x, v), atol=1e-15)


def test_constant_gauge_is_adjoint_action(field32, alg):
    g0 = random_group(np.random.default_rng(1), alg)
    out = apply_gauge(field32, GaugeTransform.constant(g0, 32))
    assert np.allclose(out.A, Ad(g0, field32.A, alg), atol=1e-13)


def test_gauge_rejects_non_unitary_and_grid_mismatch(field32):
    with pytest.raises(ValueError, match="unitary"):
        GaugeTransform(np.full((4, 4, 2, 2), 2.0))
    with pytest.raises(ValueError, match="grid mismatch"):
        apply_gauge(field32, GaugeTransform.identity(16))


def test_gauge_transform_exact_at_sites(gauge32):
    n = np.arange(32) / 32
    X1, X2 = np.meshgrid(n, n, indexing="ij")
    pts = np.stack([X1.ravel(), X2.ravel()], -1)
    plain = GaugeTransform(gauge32.g)
    assert np.allclose(plain.at(pts), gauge32.g.reshape(-1, 2, 2), atol=1e-12)


def test_holonomy_of_zero_field_is_identity():
    Z = embed_lattice(LatticeGaugeField.zeros(8))
    assert np.allclose(holonomy(Z, circle((0, 0), 0.1)), np.eye(2), atol=1e-15)


def test_reversed_curve_gives_inverse_holonomy(field32):
    A = embed_lattice(field32)
    c = polyline([(0, 0), (0.1, 0.05), (0.2, 0.2)])
    H, Hr = holonomy(A, c, 1 / 64), holonomy(A, c.reversed(), 1 / 64)
    assert np.allclose(H @ Hr, np.eye(2), atol=1e-12)


def test_constant_gauge_conjugates_holonomy_exactly(field32, alg):
    A = embed_lattice(field32)
    g0 = random_group(np.random.default_rng(5), alg)
    g = GaugeTransform.constant(g0, 32)
    loop = rectangle((0.1, 0.05), 0.2, 0.15)
    assert holonomy_covariance_residual(A, g, loop, 1 / 64) < 1e-12
    assert abs(wilson_loop(GaugedSegmentFunction(A, g), loop, 1 / 64) - wilson_loop(A, loop, 1 / 64)) < 1e-13


def test_covariance_residual_shrinks_with_mesh(field32, gauge32):
    A = embed_lattice(field32)
    loop = circle((0.0, 0.0), 0.1)
    r = [holonomy_covariance_residual(A, gauge32, loop, m) for m in (1 / 64, 1 / 128, 1 / 256)]
    assert r[0] > r[1] > r[2]
    assert r[2] < 1e-3


def test_wilson_needs_closed_loop(field32):
    with pytest.raises(ValueError, match="closed"):
        wilson_loop(embed_lattice(field32), polyline([(0, 0), (0.1, 0)]))


def test_recover_gauge_from_lattice_pair(field32, gauge32):
    Abar = apply_gauge(field32, gauge32)
    g0 = gauge32.g[0, 0]
    rec = recover_gauge(field32, Abar, (0.0, 0.0), g0, 32)
    assert rec.residual <= 2 / 32
    err = np.max(np.linalg.norm(rec.gauge.g - gauge32.g, axis=(-2, -1), ord=2))
    assert err < 2e-2


def test_recover_gauge_error_shrinks_with_N():
    f = random_trig_form(np.random.default_rng(3), kmax=2, amplitude=0.2)
    ph = random_trig_form(np.random.default_rng(7), kmax=1, amplitude=0.2)
    errs = []
    for N in (16, 32, 64):
        A = f.lattice(N)
        g = GaugeTransform.from_function(lambda p: ph.values(p)[:, 0, :], N)
        rec = recover_gauge(A, apply_gauge(A, g), (0.0, 0.0), g.g[0, 0], N)
        errs.append(np.max(np.linalg.norm(rec.gauge.g - g.g, axis=(-2, -1), ord=2)))
    assert errs[0] > errs[1] > errs[2]


def test_recover_gauge_rejects_unrelated_fields(field32):
    other = random_trig_form(np.random.default_rng(99), kmax=2, amplitude=1.0).lattice(32)
    with pytest.raises(NotGaugeEquivalentError) as info:
        recover_gauge(field32, other, (0.0, 0.0), np.eye(2), 32)
    assert info.value.residual > 2 / 32


def test_recover_gauge_rejects_off_site_origin(field32):
    with pytest.raises(ValueError, match="lattice site"):
        recover_gauge(field32, field32, (0.01, 0.0), np.eye(2), 32)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_K_distance_symmetric_and_nonnegative(a, b, c):
    assert K_distance(a, b, c) >= 0
    assert K_distance(a, b, c) == pytest.approx(K_distance(b, a, c))
    assert K_distance(a, b, 0.0) == 0.0


def test_orbit_distance_sandwich(field32):
    fam = SampleFamily(per_level=8)
    A = embed_lattice(field32)
    B = embed_lattice(random_trig_form(np.random.default_rng(4), kmax=2).lattice(32))
    rep = orbit_distance_bounds(A, B, family=fam)
    assert 0 <= rep.lower <= rep.upper
    self_rep = orbit_distance_bounds(A, A, family=fam)
    assert self_rep.upper == 0.0 and self_rep.lower == 0.0
