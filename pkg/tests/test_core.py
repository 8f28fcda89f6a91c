from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from heatladder import DomainError, EvalPoint, ExactScalar, Kind, SpaceForm, sphere_volume
from heatladder.core import gamma_half, sphere_volume_exact
from heatladder.exact import RationalPoly, SqrtPiProductError


def test_sphere_volume_examples():
    assert sphere_volume(0) == pytest.approx(2.0, rel=1e-15)
    assert_allclose(sphere_volume(1), 2 * math.pi, rtol=1e-15)
    assert_allclose(sphere_volume(2), 4 * math.pi, rtol=1e-15)
    assert_allclose(sphere_volume(3), 2 * math.pi**2, rtol=1e-15)


@given(st.integers(min_value=0, max_value=40))
def test_sphere_volume_recursion(d):
    # Vol(S^{d+2}) = 2 pi Vol(S^d) / (d + 1)
    assert_allclose(sphere_volume(d + 2), 2 * math.pi * sphere_volume(d) / (d + 1), rtol=1e-13)


@pytest.mark.parametrize("d", range(0, 12))
def test_sphere_volume_exact_matches_float(d):
    q, p = sphere_volume_exact(d)
    assert_allclose(float(q) * math.pi ** float(p), sphere_volume(d), rtol=1e-14)


def test_sphere_volume_negative():
    with pytest.raises(DomainError):
        sphere_volume(-1)


def test_gamma_half_examples():
    assert gamma_half(0) == ExactScalar(1, 1)
    assert gamma_half(1) == ExactScalar(Fraction(1, 2), 1)
    assert gamma_half(2) == ExactScalar(Fraction(3, 4), 1)


@given(st.integers(min_value=0, max_value=60))
def test_gamma_half_against_lgamma(j):
    assert_allclose(math.log(float(gamma_half(j).q)) + 0.5 * math.log(math.pi), math.lgamma(j + 0.5), rtol=1e-13, atol=1e-13)


def test_exact_scalar_refuses_pi():
    with pytest.raises(SqrtPiProductError):
        gamma_half(1) * gamma_half(2)
    assert (gamma_half(2) / gamma_half(1)) == ExactScalar(Fraction(3, 2), 0)


def test_space_form_validation():
    with pytest.raises(DomainError):
        SpaceForm(Kind.SPHERE, 0)
    with pytest.raises(DomainError):
        SpaceForm(Kind.SPHERE, 2).check_r(3.5)
    with pytest.raises(DomainError):
        SpaceForm(Kind.HYPERBOLIC, 2).check_r(-0.1)
    SpaceForm(Kind.HYPERBOLIC, 2).check_r(100.0)
    with pytest.raises(DomainError):
        EvalPoint(0.0, 1.0).validate(SpaceForm(Kind.EUCLIDEAN, 1))
    assert Kind.parse("euclidean") is Kind.EUCLIDEAN


def test_radial_drift_and_measure():
    s = SpaceForm(Kind.SPHERE, 3)
    assert_allclose(s.radial_drift(1.0), 2 / math.tan(1.0))
    assert_allclose(s.measure(1.0), 4 * math.pi * math.sin(1.0) ** 2)
    h = SpaceForm(Kind.HYPERBOLIC, 2)
    assert_allclose(h.measure(2.0), 2 * math.pi * math.sinh(2.0))


@given(st.lists(st.fractions(max_denominator=50), max_size=5), st.lists(st.fractions(max_denominator=50), max_size=5))
def test_rational_poly_product_rule(a, b):
    p, q = RationalPoly(a), RationalPoly(b)
    assert (p * q).derivative() == p.derivative() * q + p * q.derivative()
    assert (p * q).reflect() == p.reflect() * q.reflect()
    x = Fraction(3, 7)
    assert (p * q)(x) == p(x) * q(x)


def test_rational_poly_iterates_over_stored_coefficients():
    assert list(RationalPoly([1, 2, 0])) == [Fraction(1), Fraction(2)]
