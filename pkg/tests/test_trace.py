from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from heatladder import (ExactScalar, RationalPoly, c_mk, diag_recurrence_identity, heat_trace_coeffs,
                        hyper_diag_poly, q_recurrence, sphere_diag_poly, sphere_odd_kernel, sphere_trace,
                        sphere_volume, weyl_leading_coeff, hyperbolic_odd_kernel)
from heatladder.core import gamma_half, sphere_volume_exact
from heatladder.trace import diag_poly, diagonal_form, diagonal_value


def brute_cmk(m, k):
    return sum(math.prod(i * i for i in s) for s in combinations(range(1, m), k))


@pytest.mark.parametrize("m", range(1, 8))
def test_cmk_bruteforce(m):
    for k in range(0, m + 2):
        assert c_mk(m, k) == brute_cmk(m, k)


def test_cmk_examples():
    assert c_mk(4, 2) == 49
    assert c_mk(3, 0) == 1
    assert c_mk(3, 3) == 0


@given(st.integers(min_value=1, max_value=25))
def test_cmk_generating_function(m):
    # sum_k c_{m,k} x^k = prod_{i<m} (1 + i^2 x), checked at x = 1/3
    x = Fraction(1, 3)
    lhs = sum(c_mk(m, k) * x**k for k in range(m))
    assert lhs == math.prod(1 + i * i * x for i in range(1, m))


def test_diag_poly_examples():
    assert hyper_diag_poly(1) == [1]
    assert hyper_diag_poly(2) == [1, Fraction(2, 3)]
    assert hyper_diag_poly(3) == [1, 2, Fraction(16, 15)]
    assert sphere_diag_poly(1) == [1]
    assert sphere_diag_poly(2) == [1, Fraction(-2, 3)]


def test_q_recurrence_examples():
    assert q_recurrence(1, "hyperbolic") == [Fraction(1, 2)]
    assert q_recurrence(2, "hyperbolic") == [Fraction(3, 4), Fraction(1, 2)]
    assert q_recurrence(2, "sphere") == [Fraction(3, 4), Fraction(-1, 2)]


@pytest.mark.parametrize("m", range(1, 11))
@pytest.mark.parametrize("kind", ["hyperbolic", "sphere"])
def test_q_recurrence_matches_closed_coefficients(m, kind):
    assert q_recurrence(m, kind) / gamma_half(m).q == diag_poly(m, kind)


def test_heat_trace_examples():
    a = heat_trace_coeffs(1, 3)
    sp = math.sqrt(math.pi)
    assert a[0] == ExactScalar(Fraction(1, 4), 1)
    assert_allclose([float(x) for x in a], [sp / 4, sp / 4, sp / 8, sp / 24], rtol=1e-15)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_weyl_leading(m):
    assert heat_trace_coeffs(m, 0)[0] == weyl_leading_coeff(m)
    assert_allclose(float(weyl_leading_coeff(m)), sphere_volume(2 * m + 1) * (4 * math.pi) ** (-(2 * m + 1) / 2), rtol=1e-14)


@pytest.mark.parametrize("m", [1, 2])
def test_heat_trace_coeffs_expand_diagonal(m):
    # Vol * (4 pi t)^{-n/2} e^{m^2 t} p_m(t) = t^{-n/2} sum_k a_k t^k
    t = 0.01
    n = 2 * m + 1
    series = sum(float(a) * t**k for k, a in enumerate(heat_trace_coeffs(m, 12)))
    assert_allclose(series * t ** (-n / 2), sphere_trace(n, t), rtol=1e-12)


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("t", [0.05, 0.1])
def test_trace_reproduction(m, t):
    n = 2 * m + 1
    tr = sphere_trace(n, t)
    assert abs(tr - sphere_volume(n) * diagonal_value(m, "sphere", t)) / tr <= 1e-10


@pytest.mark.parametrize("m", range(1, 7))
def test_corollary_exact(m):
    assert diag_recurrence_identity(m, "hyperbolic")
    assert diag_recurrence_identity(m, "sphere_r0")


@pytest.mark.parametrize("m", range(1, 7))
def test_corollary_at_antipode(m):
    assert diag_recurrence_identity(m, "sphere_rpi")


def test_corollary_detects_wrong_form():
    m = 2
    f = diagonal_form(m, "hyperbolic")
    assert f.time_derivative().scaled(Fraction(-1, 2 * 5), Fraction(-1), -5) == diagonal_form(3, "hyperbolic")
    assert f.time_derivative().scaled(Fraction(-1, 2 * 5), Fraction(-1), 5) != diagonal_form(3, "hyperbolic")


@pytest.mark.parametrize("m", range(1, 5))
@pytest.mark.parametrize("t", [0.2, 1.0])
def test_hyperbolic_diagonal_closed_form(m, t):
    assert_allclose(hyperbolic_odd_kernel(m, t, 0.0), diagonal_value(m, "hyperbolic", t), rtol=1e-11)


@pytest.mark.parametrize("m", range(1, 4))
def test_sphere_diagonal_asymptotic(m):
    # the polynomial diagonal differs from the kernel only by theta tails
    t = 0.05
    assert_allclose(sphere_odd_kernel(m, t, 0.0), diagonal_value(m, "sphere", t), rtol=1e-12)
