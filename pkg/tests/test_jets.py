from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from heatladder import Jet, SingularityError, jet_arith, jet_elementary, ladder_apply
from heatladder.jets import cos_jet, gaussian_jet, sin_jet, sinh_jet

centers = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def test_product_example():
    a = Jet(0.0, [1, 1, 0])
    b = Jet(0.0, [1, -1, 0])
    assert_allclose(jet_arith(a, b, "mul").coeffs, [1, 0, -1])


def test_sin_over_sin_is_one():
    s = sin_jet(0.0, 4)
    q = jet_arith(s, s, "div")
    # the common zero at the centre costs one order
    assert_allclose(q.coeffs, [1, 0, 0, 0], atol=1e-15)


def test_r2_over_r():
    r2 = Jet(0.0, [0, 0, 1, 0])
    r = Jet(0.0, [0, 1, 0, 0])
    assert_allclose((r2 / r).coeffs[:2], [0, 1])


def test_pole_detected():
    with pytest.raises(SingularityError):
        Jet(0.0, [0, 1, 0]) / Jet(0.0, [0, 0, 1])


def test_mismatched_centres():
    with pytest.raises(ValueError):
        Jet(0.0, [1, 0]) + Jet(1.0, [1, 0])


def test_elementary_examples():
    assert_allclose(jet_elementary("sin", 0.0, 3).coeffs, [0, 1, 0, -1 / 6], atol=1e-16)
    assert_allclose(jet_elementary("cosh", 0.0, 2).coeffs, [1, 0, 0.5])
    assert_allclose(jet_elementary("gaussian", 0.0, 2, c=0.0, t=0.25).coeffs, [1, 0, -1])


def test_ladder_examples():
    one = ladder_apply(cos_jet(0.0, 3), sin_jet(0.0, 3), negate=True)
    assert_allclose(one.coeffs, [1, 0], atol=1e-15)
    one_h = ladder_apply(jet_elementary("cosh", 0.0, 3), sinh_jet(0.0, 3), negate=False)
    assert_allclose(one_h.coeffs, [1, 0], atol=1e-15)
    t = 0.3
    g = ladder_apply(gaussian_jet(1.0, 2, 0.0, t), sin_jet(1.0, 2), negate=True)
    assert_allclose(g.coeffs[0], math.exp(-1 / (4 * t)) / (2 * t) / math.sin(1.0), rtol=1e-14)


@given(centers, centers)
def test_sin_cos_identity(c, _):
    s, co = sin_jet(c, 6), cos_jet(c, 6)
    assert_allclose((s * s + co * co).coeffs, [1, 0, 0, 0, 0, 0, 0], atol=1e-14)


@given(centers)
def test_derivative_of_product(c):
    a, b = sin_jet(c, 6), gaussian_jet(c, 6, 0.2, 0.7)
    lhs = (a * b).derivative()
    rhs = a.derivative() * b.truncate(5) + a.truncate(5) * b.derivative()
    assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-13)


@given(centers)
def test_division_inverts_product(c):
    a, b = gaussian_jet(c, 5, 0.0, 0.5), cos_jet(c, 5) + 2.0
    assert_allclose(((a * b) / b).coeffs, a.coeffs, rtol=1e-11, atol=1e-14)


@settings(max_examples=30)
@given(centers, st.floats(min_value=-0.2, max_value=0.2))
def test_gaussian_jet_matches_function(c, h):
    t = 0.4
    g = gaussian_jet(c, 24, 0.3, t)
    assert_allclose(g.evaluate(h), math.exp(-((c + h + 0.3) ** 2) / (4 * t)), rtol=1e-12)


def test_batched_coefficients():
    t = np.array([0.2, 0.5, 1.0])
    g = gaussian_jet(0.5, 3, 0.0, t)
    assert g.coeffs.shape == (4, 3)
    for i, ti in enumerate(t):
        assert_allclose(g.coeffs[:, i], gaussian_jet(0.5, 3, 0.0, ti).coeffs)
