import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ymflow.mollifier import MollifierSpec, UnderResolvedError


@pytest.mark.parametrize("variant", ["symmetric", "nonanticipative"])
def test_profiles_integrate_to_one(variant):
    m = MollifierSpec(variant)
    lo, hi = m.t_center - m.t_halfwidth, m.t_center + m.t_halfwidth
    assert quad(m.phi_t, lo, hi)[0] == pytest.approx(1, abs=1e-10)
    assert quad(lambda r: 2 * np.pi * r * m.phi_x(r), 0, m.r0)[0] == pytest.approx(1, abs=1e-10)
    assert abs(m.hat_t(0.0) - 1) < 1e-12
    assert abs(m.hat_x(0.0) - 1) < 1e-12


def test_nonanticipative_support_is_in_the_future():
    m = MollifierSpec("nonanticipative")
    assert m.phi_t(-1e-4) == 0
    assert m.phi_t(m.tau / 2) > 0


def test_fourier_transform_matches_quadrature():
    m = MollifierSpec()
    for k in (0.0, 3.0, 40.0):
        num = quad(lambda r: 2 * np.pi * r * m.phi_x(r) * __import__("scipy").special.j0(k * r), 0, m.r0, limit=200)[0]
        assert float(np.real(m.hat_x(k))) == pytest.approx(num, abs=1e-9)


def test_support_must_fit():
    with pytest.raises(ValueError):
        MollifierSpec(r0=0.2, tau=0.01)
    with pytest.raises(ValueError):
        MollifierSpec("causal")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([32, 64]), st.floats(0.5, 1.0))
def test_stencil_and_time_weights_normalised(N, eps):
    m = MollifierSpec("nonanticipative")
    s = m.spatial_stencil(N, eps)
    assert s.sum() * (1 / N) ** 2 == pytest.approx(1, rel=1e-12)
    assert np.allclose(s, s[::-1, ::-1])
    lags, w = m.time_weights((1 / N) ** 2 / 4, eps)
    assert np.sum(w) * (1 / N) ** 2 / 4 == pytest.approx(1, rel=1e-12)
    assert np.all(lags >= 0)


def test_under_resolved_stencil():
    with pytest.raises(UnderResolvedError, match="eps >="):
        MollifierSpec().spatial_stencil(32, 0.1)
