from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from heatladder import (DomainError, EuclidKernel, HyperbolicOddKernel, SphereOddKernel, ThetaTruncation,
                        TruncationError, circle_kernel_jet, euclid_kernel, euclid_recurrence_identity,
                        hyperbolic_odd_kernel, sphere_kernel_spectral, sphere_odd_kernel)
from heatladder.spectral import sphere_diagonal_spectral


def circle_theta(t, r):
    """Wrapped Gaussian via the Jacobi theta function (independent of the image sum)."""
    # the q-series cancels down to exp(-r^2/4t) relative size; 120 digits cover t >= 0.01
    with mpmath.workdps(120):
        return float(mpmath.jtheta(3, r / 2, mpmath.exp(-t)) / (2 * mpmath.pi))


def test_euclid_examples():
    assert_allclose(euclid_kernel(1, 1 / (4 * math.pi), 0.0), 1.0, rtol=1e-15)
    assert_allclose(euclid_kernel(2, 1.0, 0.0), 1 / (4 * math.pi), rtol=1e-15)
    assert_allclose(euclid_kernel(3, 0.5, 1.0), (2 * math.pi) ** -1.5 * math.exp(-0.5), rtol=1e-14)


def test_circle_examples():
    assert_allclose(circle_kernel_jet(100.0, 0.0, 0).coeffs[0], 1 / (2 * math.pi), atol=1e-12)
    assert_allclose(circle_kernel_jet(0.25, 0.0, 0).coeffs[0], 0.5641895835, atol=1e-10)


@settings(max_examples=40)
@given(st.floats(min_value=0.01, max_value=5.0), st.floats(min_value=-7.0, max_value=7.0))
def test_circle_matches_theta_function(t, r):
    assert_allclose(circle_kernel_jet(t, r, 0).coeffs[0], circle_theta(t, r), rtol=1e-12)


@pytest.mark.parametrize("t", [0.1, 0.24, 0.26, 2.0])
def test_circle_jet_derivatives(t):
    jet = circle_kernel_jet(t, 1.1, 2)
    with mpmath.workdps(40):
        d1 = float(mpmath.jtheta(3, 0.55, mpmath.exp(-t), 1) / 2) / (2 * math.pi)
        d2 = float(mpmath.jtheta(3, 0.55, mpmath.exp(-t), 2) / 4) / (2 * math.pi)
    assert_allclose(jet.coeffs[1], d1, rtol=1e-11)
    assert_allclose(2 * jet.coeffs[2], d2, rtol=1e-11)


def test_truncation_error_reported():
    with pytest.raises(TruncationError):
        circle_kernel_jet(0.2, 0.0, 0, ThetaTruncation(tol=1e-300, max_terms=3))


def test_sphere_diagonal_matches_spectral():
    assert_allclose(sphere_odd_kernel(1, 0.5, 0.0), sphere_diagonal_spectral(3, 0.5), rtol=1e-10)


def test_s3_formula():
    # kappa_3 = e^t / (4 pi t)^{3/2} sum_k (r + 2 pi k) / sin r exp(-(r + 2 pi k)^2 / 4t)
    t, r = 0.3, 1.2
    s = sum((r + 2 * math.pi * k) * math.exp(-((r + 2 * math.pi * k) ** 2) / (4 * t)) for k in range(-6, 7))
    assert_allclose(sphere_odd_kernel(1, t, r), math.exp(t) * (4 * math.pi * t) ** -1.5 * s / math.sin(r), rtol=1e-13)


def test_hyperbolic_examples():
    t, r = 1.0, 1.0
    expected = (4 * math.pi) ** -1.5 * math.exp(-1) / math.sinh(1) * math.exp(-0.25)
    assert_allclose(hyperbolic_odd_kernel(1, t, r), expected, rtol=1e-13)
    for t in (0.2, 1.0, 3.0):
        assert_allclose(hyperbolic_odd_kernel(1, t, 0.0), (4 * math.pi * t) ** -1.5 * math.exp(-t), rtol=1e-13)


def test_hyperbolic_k1_is_gaussian():
    assert_allclose(HyperbolicOddKernel(0).value(0.8, 0.4), euclid_kernel(1, 0.8, 0.4), rtol=1e-15)


def test_euclid_recurrence_examples():
    assert euclid_recurrence_identity(1, 1.0, 0.5) <= 1e-12
    assert euclid_recurrence_identity(2, 0.7, 1.0) <= 1e-9
    assert euclid_recurrence_identity(1, 1.0, 0.5, prefactor=1.0) > 1.0


def test_small_time_euclidean_limit():
    h = euclid_kernel(3, 1e-3, 0.5)
    assert abs(sphere_odd_kernel(1, 1e-3, 0.5) / h - 1) < 0.05
    assert abs(hyperbolic_odd_kernel(1, 1e-3, 0.5) / h - 1) < 0.05


@pytest.mark.parametrize("m", [1, 2, 3])
def test_small_time_van_vleck_factor(m):
    # leading small-t ratio to the Gaussian is (r / sin r)^m, resp. (r / sinh r)^m
    r, t = 0.5, 1e-4
    h = euclid_kernel(2 * m + 1, t, r)
    assert_allclose(sphere_odd_kernel(m, t, r) / h, (r / math.sin(r)) ** m, rtol=1e-2)
    assert_allclose(hyperbolic_odd_kernel(m, t, r) / h, (r / math.sinh(r)) ** m, rtol=1e-2)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=3), st.floats(min_value=0.1, max_value=30.0),
       st.floats(min_value=0.0, max_value=math.pi))
def test_sphere_closed_form_matches_spectral(m, t, r):
    assert_allclose(sphere_odd_kernel(m, t, r), sphere_kernel_spectral(2 * m + 1, t, r), rtol=1e-9)


@pytest.mark.parametrize("m", [1, 2])
def test_singular_centres_continuous(m):
    k = SphereOddKernel(m)
    for c in (0.0, math.pi):
        for eps in (1e-9, 1e-5, 0.02):
            r = abs(c - eps)
            assert_allclose(k.value(0.4, r), sphere_kernel_spectral(2 * m + 1, 0.4, r), rtol=1e-10)


def test_hyperbolic_mass_against_quad():
    k = HyperbolicOddKernel(1)
    mass, _ = quad(lambda r: k.value(0.5, r) * 4 * math.pi * math.sinh(r) ** 2, 0, 40, limit=200)
    assert_allclose(mass, 1.0, rtol=1e-9)


def test_positivity_and_monotone():
    r = np.linspace(0.0, math.pi, 50)
    for m in (1, 2):
        v = SphereOddKernel(m).value(0.3, r)
        assert np.all(v > 0)
        assert np.all(np.diff(v) < 0)


def test_domain_errors():
    with pytest.raises(DomainError):
        sphere_odd_kernel(1, 0.5, 4.0)
    with pytest.raises(DomainError):
        sphere_odd_kernel(1, -0.5, 1.0)
    with pytest.raises(DomainError):
        euclid_kernel(0, 1.0, 1.0)
    assert EuclidKernel(2).time_derivative(0.5, 1.0) == pytest.approx(
        (1 / (4 * 0.25) - 1 / 0.5) * euclid_kernel(2, 0.5, 1.0), rel=1e-12)
