import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ymflow.mollifier import MollifierSpec
from ymflow.renorm import (
    LOG2_OVER_4PI,
    KernelSpec,
    RenormConstants,
    cbar,
    chat,
    compute_constants,
    csym,
    csym_limit,
    ctilde0,
    identity_residual,
)


def heat(t, r2):
    return np.exp(-r2 / (4 * t)) / (4 * np.pi * t)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 0.24), st.floats(0, 0.45))
def test_kernel_is_heat_kernel_near_origin(t, r):
    k = KernelSpec()
    if (t * t + r**4) ** 0.25 <= k.inner:
        assert k.K(t, r) == pytest.approx(heat(t, r * r), rel=1e-13)
        assert abs(k.Q(t, r)) <= 1e-12 * heat(t, r * r) + 1e-300


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_kernel_vanishes_outside_unit_ball(t, r):
    k = KernelSpec()
    if (t * t + r**4) ** 0.25 >= k.outer:
        assert k.K(t, r) == 0.0


def test_derivative_matches_finite_difference():
    k = KernelSpec()
    t, x1, x2, h = 0.1, 0.3, -0.2, 1e-6
    fd = (k.K(t, x1 + h, x2) - k.K(t, x1 - h, x2)) / (2 * h)
    assert float(k.dK(1, t, x1, x2)) == pytest.approx(float(fd), rel=1e-6)


def test_chat_isotropic():
    assert abs(chat(2**-3, 1) - chat(2**-3, 2)) <= 1e-6


def test_cbar_increments_approach_log2_over_4pi():
    # heat-kernel closed form: cbar(eps) = log(1/eps) / (4 pi) + const + o(1)
    vals = [cbar(2.0**-k) for k in range(4, 7)]
    diffs = np.diff(vals)
    assert abs(diffs[-1] - LOG2_OVER_4PI) <= 0.05 * LOG2_OVER_4PI
    assert abs(diffs[-1] - LOG2_OVER_4PI) < abs(diffs[0] - LOG2_OVER_4PI)
    assert LOG2_OVER_4PI == pytest.approx(0.055157, abs=5e-6)


def test_identity_for_csym():
    lhs, terms, resid = identity_residual(2**-3)
    assert resid <= 1e-5
    assert lhs == pytest.approx(csym(2**-3), rel=1e-10)


def test_csym_cauchy_decreasing():
    rep = csym_limit([2.0**-k for k in range(2, 7)])
    assert rep["decreasing"]
    assert all(d > 0 for d in rep["cauchy"])


def test_ctilde0_vanishes_only_for_nonanticipative():
    assert abs(ctilde0(2**-3, MollifierSpec("nonanticipative"))) <= 1e-8
    assert ctilde0(2**-3, MollifierSpec("symmetric")) > 1e-3


def test_constants_record_round_trip(tmp_path):
    c = compute_constants(2**-2, alg_lambda=-2.0)
    assert c.csym_eps == 4 * c.chat_eps - c.cbar_eps
    assert all(v < 1e-6 for v in c.errors.values())
    p = tmp_path / "c.json"
    p.write_text(c.to_json())
    assert RenormConstants.load(p) == c


def test_constants_are_algebra_independent():
    a = compute_constants(2**-2, alg_lambda=-2.0, with_error=False)
    b = compute_constants(2**-2, alg_lambda=-3.0, with_error=False)
    assert (a.cbar_eps, a.chat_eps, a.ctilde_eps) == (b.cbar_eps, b.chat_eps, b.ctilde_eps)


def test_eps_range():
    with pytest.raises(ValueError):
        cbar(0.0)
    with pytest.raises(ValueError):
        cbar(2.0)
