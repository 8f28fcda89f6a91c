from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import simpson
from scipy.special import eval_gegenbauer, eval_legendre

from heatladder import (DomainError, SphereSpectralKernel, sphere_kernel_spectral, sphere_odd_kernel,
                        sphere_trace, sphere_volume, zonal_ratio)
from heatladder.spectral import multiplicity, sphere_diagonal_spectral, truncation_index


def test_multiplicity_examples():
    assert multiplicity(2, 1) == 3
    assert multiplicity(2, 2) == 5
    assert multiplicity(3, 1) == 4


@given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=60))
def test_multiplicity_difference_formula(n, k):
    # harmonic polynomials of degree k in n+1 variables: C(k+n, n) - C(k+n-2, n)
    lower = math.comb(k + n - 2, n) if k >= 2 else 0
    assert multiplicity(n, k) == math.comb(k + n, n) - lower


def test_multiplicity_big_integers():
    assert isinstance(multiplicity(50, 10**4), int)


def test_zonal_examples():
    assert zonal_ratio(5, 0, 0.3) == 1.0
    assert_allclose(zonal_ratio(2, 1, 0.37), 0.37)
    assert_allclose(zonal_ratio(2, 3, 0.5), -0.4375, rtol=1e-15)


@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=40),
       st.floats(min_value=-1.0, max_value=1.0))
def test_zonal_against_scipy(n, k, x):
    lam = (n - 1) / 2
    ref = eval_legendre(k, x) if n == 2 else eval_gegenbauer(k, lam, x) / eval_gegenbauer(k, lam, 1.0)
    assert_allclose(zonal_ratio(n, k, x), ref, rtol=1e-10, atol=1e-12)


def test_uniform_limit():
    for r in (0.0, 1.0, math.pi):
        assert_allclose(sphere_kernel_spectral(2, 50.0, r), 1 / (4 * math.pi), rtol=1e-12)


def test_agrees_with_closed_form_example():
    assert_allclose(sphere_kernel_spectral(3, 0.5, 1.0), sphere_odd_kernel(1, 0.5, 1.0), rtol=1e-10)


def test_trace_examples():
    assert_allclose(sphere_trace(3, 60.0), 1.0, rtol=1e-15)
    assert_allclose(sphere_trace(3, 0.1), sphere_volume(3) * sphere_odd_kernel(1, 0.1, 0.0), rtol=1e-10)
    partial = sum((2 * k + 1) * math.exp(-k * (k + 1)) for k in range(8))
    assert_allclose(sphere_trace(2, 1.0), partial, rtol=1e-15)
    assert_allclose(sphere_trace(2, 1.0), 1.4184426, rtol=1e-7)


def test_mass_from_series():
    # integrating the zonal series term by term leaves only k = 0
    r = np.linspace(0, math.pi, 4001)
    v = sphere_kernel_spectral(2, 0.3, r) * 2 * math.pi * np.sin(r)
    assert_allclose(simpson(v, x=r), 1.0, rtol=1e-9)


def test_escalation_keeps_positivity():
    v = sphere_kernel_spectral(2, 0.01, np.array([2.5, 3.0, math.pi]))
    assert np.all(v > 0)
    assert np.all(np.diff(v) < 0)


def test_escalation_matches_closed_form_tail():
    assert_allclose(sphere_kernel_spectral(3, 0.05, 3.0), sphere_odd_kernel(1, 0.05, 3.0), rtol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.05, max_value=3.0), st.floats(min_value=0.1, max_value=3.0))
def test_spectral_jet_matches_finite_difference(t, r):
    k = SphereSpectralKernel(4)
    jet = k.radial_jet(t, r, 2)
    h = 1e-4
    fd = (k.value(t, min(r + h, math.pi)) - k.value(t, r - h)) / (min(r + h, math.pi) - (r - h))
    assert_allclose(jet.coeffs[0], k.value(t, r), rtol=1e-12)
    assert_allclose(jet.coeffs[1], fd, rtol=1e-5, atol=1e-9 * abs(jet.coeffs[0]) + 1e-12)


def test_truncation_index_grows_as_t_shrinks():
    assert truncation_index(2, 0.01) > truncation_index(2, 0.1) > truncation_index(2, 1.0)


def test_domain():
    with pytest.raises(DomainError):
        sphere_kernel_spectral(1, 0.5, 0.1)
    with pytest.raises(DomainError):
        sphere_kernel_spectral(2, 1e-6, 0.1)
    with pytest.raises(DomainError):
        zonal_ratio(2, 2, 1.5)


def test_diagonal_is_trace_over_volume():
    assert_allclose(sphere_diagonal_spectral(4, 0.2), sphere_kernel_spectral(4, 0.2, 0.0), rtol=1e-13)
