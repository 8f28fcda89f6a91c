"""Exact diagonal heat-kernel polynomials and heat-trace coefficients.

Everything here is rational arithmetic.  Half-integer Gamma values enter only
through their rational part, with the lone factor sqrt(pi) tracked by
:class:`~heatladder.exact.ExactScalar`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .core import gamma_half, sphere_volume_exact
from .errors import DomainError
from .exact import ExactScalar, RationalPoly

DiagKind = Literal["hyperbolic", "sphere"]


def _check_m(m: int) -> None:
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m}")


def c_mk(m: int, k: int) -> int:
    """Elementary symmetric polynomial e_k of the squares 1, 4, ..., (m-1)^2."""
    _check_m(m)
    if k < 0:
        raise DomainError("k must be >= 0")
    if k >= m:
        return 0
    # e[j] after adding x: e[j] += x * e[j-1], updated from the top down
    e = [1] + [0] * k
    for i in range(1, m):
        x = i * i
        for j in range(min(k, i), 0, -1):
            e[j] += x * e[j - 1]
    return e[k]


def hyper_diag_poly(m: int) -> RationalPoly:
    """P_m with coefficients Gamma(m-k+1/2) c_{m,k} / Gamma(m+1/2)."""
    _check_m(m)
    top = gamma_half(m)
    return RationalPoly((gamma_half(m - k) * c_mk(m, k) / top).rational for k in range(m))


def sphere_diag_poly(m: int) -> RationalPoly:
    """p_m(t) = P_m(-t)."""
    return hyper_diag_poly(m).reflect()


def diag_poly(m: int, kind: DiagKind) -> RationalPoly:
    if kind == "hyperbolic":
        return hyper_diag_poly(m)
    if kind == "sphere":
        return sphere_diag_poly(m)
    raise DomainError(f"unknown diagonal kind {kind!r}")


def q_recurrence(m: int, kind: DiagKind) -> RationalPoly:
    """Q_m (or q_m) with sqrt(pi) divided out, from the first-order recurrence.

    Q_m = (m - 1/2 + s (m-1)^2 t) Q_{m-1} - t Q'_{m-1}, Q_0 = 1, where s = +1
    for the hyperbolic polynomial and s = -1 for the sphere one.
    """
    _check_m(m)
    if kind not in ("hyperbolic", "sphere"):
        raise DomainError(f"unknown diagonal kind {kind!r}")
    sign = 1 if kind == "hyperbolic" else -1
    q = RationalPoly([1])
    for j in range(1, m + 1):
        factor = RationalPoly([Fraction(2 * j - 1, 2), sign * (j - 1) ** 2])
        q = factor * q - q.derivative().shift_up()
    return q


def heat_trace_coeffs(m: int, K: int) -> list[ExactScalar]:
    """Heat-trace coefficients a_{2m+1,k}, k = 0..K, each a rational times sqrt(pi)."""
    _check_m(m)
    if K < 0:
        raise DomainError("K must be >= 0")
    denom = math.factorial(2 * m)
    out = []
    for k in range(K + 1):
        total = ExactScalar(0, 1)
        for l in range(min(k, m - 1) + 1):
            term = gamma_half(m - l) * Fraction(
                (-1) ** l * m ** (2 * k - 2 * l) * c_mk(m, l), denom * math.factorial(k - l)
            )
            total = total + term
        out.append(total)
    return out


def weyl_leading_coeff(m: int) -> ExactScalar:
    """Vol(S^(2m+1)) (4 pi)^(-(2m+1)/2) as an exact rational times sqrt(pi)."""
    _check_m(m)
    q, p = sphere_volume_exact(2 * m + 1)
    # (4 pi)^(-(2m+1)/2) = pi^(-(2m+1)/2) / (2 * 4^m)
    power = p - Fraction(2 * m + 1, 2)
    if power != Fraction(1, 2):
        raise ArithmeticError(f"unexpected power of pi {power}")
    return ExactScalar(q / (2 * 4**m), 1)


@dataclass(frozen=True)
class DiagonalForm:
    """The function ``pi**pi_power * t**t_power * exp(rate * t) * poly(t)``.

    Used to state the diagonal time-derivative recurrences as exact identities.
    """

    pi_power: Fraction
    t_power: Fraction
    rate: int
    poly: RationalPoly

    def time_derivative(self) -> DiagonalForm:
        # d/dt [t^a e^{lt} P] = t^{a-1} e^{lt} (a P + l t P + t P')
        p = self.poly
        new = p * self.t_power + p.shift_up() * self.rate + p.derivative().shift_up()
        return DiagonalForm(self.pi_power, self.t_power - 1, self.rate, new)

    def scaled(self, c: Fraction, pi_power: Fraction = Fraction(0), rate: int = 0) -> DiagonalForm:
        return DiagonalForm(self.pi_power + pi_power, self.t_power, self.rate + rate, self.poly * c)


def diagonal_form(m: int, kind: DiagKind) -> DiagonalForm:
    """(4 pi t)^(-n/2) exp(-+ m^2 t) poly_m(t) for n = 2m + 1."""
    _check_m(m)
    n = 2 * m + 1
    rate = -m * m if kind == "hyperbolic" else m * m
    # (4 pi)^(-n/2) = 2^(-n) pi^(-n/2)
    return DiagonalForm(Fraction(-n, 2), Fraction(-n, 2), rate,
                        diag_poly(m, kind) * Fraction(1, 2**n))


def _rpi_residual(m: int, t_values=(0.3, 0.6, 1.0)) -> float:
    from .closed_form import SphereOddKernel

    n = 2 * m + 1
    lower, upper = SphereOddKernel(m), SphereOddKernel(m + 1)
    worst = 0.0
    for t in t_values:
        # wide step plus two Richardson levels: roundoff, not truncation, dominates small steps
        h = 1e-2 * t

        def d(step):
            return (lower.value(t + step, math.pi) - lower.value(t - step, math.pi)) / (2 * step)

        d1, d2, d4 = d(h), d(h / 2), d(h / 4)
        dt = (16 * (4 * d4 - d2) / 3 - (4 * d2 - d1) / 3) / 15
        rhs = math.exp(n * t) / (2 * n * math.pi) * dt
        lhs = upper.value(t, math.pi)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst


def diag_recurrence_identity(m: int, which: Literal["hyperbolic", "sphere_r0", "sphere_rpi"],
                             tol: float = 1e-7) -> bool:
    """Check the diagonal time-derivative recurrence between n = 2m+1 and n + 2.

    ``hyperbolic`` and ``sphere_r0`` compare exact diagonal forms with zero
    tolerance; ``sphere_rpi`` uses closed-form values at r = pi and a
    Richardson-extrapolated time difference, at relative tolerance ``tol``.
    """
    _check_m(m)
    n = 2 * m + 1
    if which == "sphere_rpi":
        return bool(_rpi_residual(m) <= tol)
    if which not in ("hyperbolic", "sphere_r0"):
        raise DomainError(f"unknown identity {which!r}")
    kind: DiagKind = "hyperbolic" if which == "hyperbolic" else "sphere"
    # K_{n+2}(t,0) = -exp(-+ n t) / (2 n pi) d/dt K_n(t,0)
    rate = -n if kind == "hyperbolic" else n
    rhs = diagonal_form(m, kind).time_derivative().scaled(Fraction(-1, 2 * n), Fraction(-1), rate)
    return rhs == diagonal_form(m + 1, kind)


def diagonal_value(m: int, kind: DiagKind, t) -> np.ndarray:
    """Float evaluation of the diagonal form (4 pi t)^(-n/2) exp(-+ m^2 t) poly_m(t)."""
    f = diagonal_form(m, kind)
    t = np.asarray(t, dtype=float)
    return (math.pi ** float(f.pi_power) * t ** float(f.t_power) * np.exp(f.rate * t) * f.poly(t))
