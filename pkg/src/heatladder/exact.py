"""Exact rational scalars (optionally carrying one factor of sqrt(pi)) and
polynomials with rational coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

Rational = Union[int, Fraction]


class SqrtPiProductError(ArithmeticError):
    """Raised when two sqrt(pi)-carrying scalars would be multiplied."""


@dataclass(frozen=True)
class ExactScalar:
    """The number ``q * sqrt(pi) ** sqrtpi_power`` with ``q`` rational.

    Only powers 0 and 1 are representable; a product of two scalars that both
    carry ``sqrt(pi)`` is refused rather than silently folded into ``q``.
    """

    q: Fraction
    sqrtpi_power: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", Fraction(self.q))
        if self.sqrtpi_power not in (0, 1):
            raise ValueError(f"sqrtpi_power must be 0 or 1, got {self.sqrtpi_power}")

    @property
    def rational(self) -> Fraction:
        return self.q

    def __mul__(self, other: ExactScalar | Rational) -> ExactScalar:
        if not isinstance(other, ExactScalar):
            return ExactScalar(self.q * Fraction(other), self.sqrtpi_power)
        power = self.sqrtpi_power + other.sqrtpi_power
        if power > 1:
            raise SqrtPiProductError("product of two sqrt(pi)-carrying scalars")
        return ExactScalar(self.q * other.q, power)

    __rmul__ = __mul__

    def __truediv__(self, other: ExactScalar | Rational) -> ExactScalar:
        if not isinstance(other, ExactScalar):
            return ExactScalar(self.q / Fraction(other), self.sqrtpi_power)
        power = self.sqrtpi_power - other.sqrtpi_power
        if power < 0:
            raise SqrtPiProductError("quotient would carry 1/sqrt(pi)")
        return ExactScalar(self.q / other.q, power)

    def __add__(self, other: ExactScalar) -> ExactScalar:
        if self.q == 0:
            return other
        if other.q == 0:
            return self
        if self.sqrtpi_power != other.sqrtpi_power:
            raise ValueError("cannot add scalars with different sqrt(pi) powers")
        return ExactScalar(self.q + other.q, self.sqrtpi_power)

    def __neg__(self) -> ExactScalar:
        return ExactScalar(-self.q, self.sqrtpi_power)

    def __sub__(self, other: ExactScalar) -> ExactScalar:
        return self + (-other)

    def __float__(self) -> float:
        return float(self.q) * math.sqrt(math.pi) ** self.sqrtpi_power

    def __str__(self) -> str:
        return f"{self.q}*sqrt(pi)" if self.sqrtpi_power else str(self.q)


def _trim(coeffs: Iterable[Rational]) -> tuple[Fraction, ...]:
    out = [Fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


class RationalPoly:
    """Polynomial in ``t`` with exact rational coefficients, ascending powers."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Rational] = ()):
        self.coeffs: tuple[Fraction, ...] = _trim(coeffs)

    @classmethod
    def monomial(cls, degree: int, coeff: Rational = 1) -> RationalPoly:
        return cls([0] * degree + [coeff])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __iter__(self):
        # explicit, since __getitem__ pads with zeros and would never stop
        return iter(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, RationalPoly):
            return self.coeffs == other.coeffs
        if isinstance(other, (list, tuple)):
            return self.coeffs == _trim(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return "RationalPoly([" + ", ".join(str(c) for c in self.coeffs) + "])"

    def __add__(self, other: RationalPoly) -> RationalPoly:
        n = max(len(self), len(other))
        return RationalPoly(self[k] + other[k] for k in range(n))

    def __sub__(self, other: RationalPoly) -> RationalPoly:
        n = max(len(self), len(other))
        return RationalPoly(self[k] - other[k] for k in range(n))

    def __neg__(self) -> RationalPoly:
        return RationalPoly(-c for c in self.coeffs)

    def __mul__(self, other: RationalPoly | Rational) -> RationalPoly:
        if not isinstance(other, RationalPoly):
            c = Fraction(other)
            return RationalPoly(c * a for a in self.coeffs)
        if self.is_zero() or other.is_zero():
            return RationalPoly()
        out = [Fraction(0)] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return RationalPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, c: Rational) -> RationalPoly:
        c = Fraction(c)
        return RationalPoly(a / c for a in self.coeffs)

    def derivative(self) -> RationalPoly:
        return RationalPoly(k * a for k, a in enumerate(self.coeffs) if k > 0)

    def shift_up(self, j: int = 1) -> RationalPoly:
        """Multiply by ``t**j``."""
        return RationalPoly([0] * j + list(self.coeffs)) if self.coeffs else RationalPoly()

    def reflect(self) -> RationalPoly:
        """The polynomial ``p(-t)``."""
        return RationalPoly(a if k % 2 == 0 else -a for k, a in enumerate(self.coeffs))

    def low_order(self) -> int:
        """Number of leading zero coefficients (the ``t``-adic valuation)."""
        for k, a in enumerate(self.coeffs):
            if a:
                return k
        return 0

    def __call__(self, t):
        # Horner; works for Fraction, float and numpy arrays alike
        acc = 0
        for a in reversed(self.coeffs):
            acc = acc * t + (a if isinstance(t, Fraction) else float(a))
        return acc
