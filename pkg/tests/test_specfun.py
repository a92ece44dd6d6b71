import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacgap.errors import DomainError, ParameterError
from tacgap.specfun import X_SWITCH, ScaledReal, airy, airy_scaled, shifted_airy

mpmath.mp.dps = 40


def mp_airy(x):
    return float(mpmath.airyai(x)), float(mpmath.airyai(x, derivative=1))


def test_airy_at_zero_matches_high_precision_constants():
    ai, aip = airy(0.0)
    assert ai == pytest.approx(0.35502805388781723926, rel=1e-15)
    assert aip == pytest.approx(-0.25881940379280679840, rel=1e-15)


@pytest.mark.parametrize("x", [-14.3, -9.5, -9.0, -6.1, -2.0, -0.3, 0.7, 3.3, 8.9, 9.0, 12.0, 25.0])
def test_airy_against_mpmath(x):
    ai, aip = airy(x)
    ref_ai, ref_aip = mp_airy(x)
    assert ai == pytest.approx(ref_ai, rel=1e-11, abs=1e-300)
    assert aip == pytest.approx(ref_aip, rel=1e-11, abs=1e-300)


def test_ode_residual_at_five():
    h = 1e-3
    f = [airy(5.0 + k * h)[0] for k in (-2, -1, 0, 1, 2)]
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    assert abs(d2 - 5.0 * f[2]) <= 1e-7 * abs(5.0 * f[2])


def test_ode_residual_grid():
    h = 1e-3
    x = np.arange(-10.0, 10.0 + 1e-12, 0.25)
    f = [airy(x + k * h)[0] for k in (-2, -1, 0, 1, 2)]
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    assert np.all(np.abs(d2 - x * f[2]) <= 1e-6 * (1 + np.abs(x * f[2])))


def test_leading_asymptotic_at_ten():
    lead = math.exp(-(2 / 3) * 10**1.5) / (2 * math.sqrt(math.pi) * 10**0.25)
    assert airy(10.0)[0] == pytest.approx(lead, rel=1e-2)


@pytest.mark.parametrize("edge", [X_SWITCH, -X_SWITCH])
def test_continuity_at_switchover(edge):
    below = np.array(airy(np.nextafter(edge, -np.inf)))
    above = np.array(airy(np.nextafter(edge, np.inf)))
    at = np.array(airy(edge))
    assert np.all(np.abs(below - above) <= 1e-12 * (1 + np.abs(at)))


def test_vectorized_matches_scalar():
    x = np.linspace(-12, 12, 17)
    ai, aip = airy(x)
    for xi, a, d in zip(x, ai, aip):
        assert (a, d) == airy(float(xi))


def test_rejects_non_finite_and_out_of_range():
    with pytest.raises(DomainError):
        airy(float("nan"))
    with pytest.raises(ParameterError):
        airy(2000.0)


def test_scaled_matches_unscaled_at_zero():
    ai, aip = airy_scaled(0.0)
    assert ai.to_real() == pytest.approx(airy(0.0)[0], rel=2.3e-16)
    assert aip.to_real() == pytest.approx(airy(0.0)[1], rel=2.3e-16)


def test_scaled_far_right_tail():
    x = 200.0
    ai, _ = airy_scaled(x)
    zeta = (2 / 3) * x**1.5
    ref = mpmath.log(mpmath.airyai(mpmath.mpf(x)))
    assert ai.sign == 1
    assert ai.log_mag == pytest.approx(float(ref), rel=1e-6)
    assert ai.log_mag == pytest.approx(-zeta - math.log(2 * math.sqrt(math.pi) * x**0.25), rel=1e-6)


def test_scaled_sign_in_oscillatory_region():
    ai, _ = airy_scaled(-3.0)
    assert ai.sign == np.sign(airy(-3.0)[0])


def test_shifted_airy_examples():
    assert shifted_airy(0.0, 1.0).to_real() == pytest.approx(airy(1.0)[0], rel=1e-15)
    prod = (shifted_airy(1.0, 0.0) * shifted_airy(-1.0, 0.0)).to_real()
    assert prod == pytest.approx(airy(1.0)[0] ** 2, rel=1e-13)
    ref = math.exp(0.5 + 1 / 12) * float(mpmath.airyai(1.25))
    assert shifted_airy(0.5, 1.0).to_real() == pytest.approx(ref, rel=1e-12)


def test_shifted_airy_product_grid():
    g = np.linspace(-2, 2, 5)
    for tau in g:
        for x in g:
            for y in g:
                lhs = (shifted_airy(tau, x) * shifted_airy(-tau, y)).to_real()
                rhs = math.exp(tau * (x - y)) * airy(x + tau**2)[0] * airy(y + tau**2)[0]
                assert lhs == pytest.approx(rhs, rel=1e-12)


def test_scaled_real_zero_and_large_values():
    z = ScaledReal.from_real(0.0)
    assert z.sign == 0 and z.to_real() == 0.0
    big = ScaledReal(1, 1000.0)
    assert (big / big).to_real() == 1.0
    with pytest.raises(ZeroDivisionError):
        big / z


def test_scaled_real_cancellation_flag():
    a = ScaledReal.from_real(1.0)
    b = ScaledReal.from_real(-(1.0 - 1e-10))
    _, lost = a.add(b)
    assert lost > 8
    _, lost = a.add(a)
    assert lost == 0.0


def _nonzero(lo, hi):
    mag = st.floats(min_value=lo, max_value=hi)
    return mag | mag.map(lambda v: -v)


@settings(max_examples=1000, deadline=None)
@given(_nonzero(1e-6, 1e6), _nonzero(1e-6, 1e6))
def test_scaled_real_mul_div_roundtrip(a, b):
    sa, sb = ScaledReal.from_real(a), ScaledReal.from_real(b)
    assert (sa * (sb / sa)).to_real() == pytest.approx(b, rel=1e-14)


@settings(max_examples=1000, deadline=None)
@given(_nonzero(1e-200, 1e200), _nonzero(1e-200, 1e200))
def test_scaled_real_roundtrip_wide_range(a, b):
    # a log-magnitude L carries an absolute error of a few ulp(L)
    sa, sb = ScaledReal.from_real(a), ScaledReal.from_real(b)
    scale = 1.0 + abs(math.log(abs(a))) + abs(math.log(abs(b)))
    assert (sa * (sb / sa)).to_real() == pytest.approx(b, rel=4 * 2.3e-16 * scale)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e100, 1e100), st.floats(-1e100, 1e100))
def test_scaled_real_addition(a, b):
    s = (ScaledReal.from_real(a) + ScaledReal.from_real(b)).to_real()
    assert s == pytest.approx(a + b, rel=1e-12, abs=1e-12 * max(abs(a), abs(b)))
