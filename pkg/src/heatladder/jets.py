"""Truncated Taylor series ("jets") in the radial variable.

A :class:`Jet` stores scaled Taylor coefficients ``a_k = f^(k)(r0) / k!`` of a
function around ``r0``.  Coefficients may carry trailing batch dimensions, so a
single jet can describe the same expansion for many times or many centres at
once; all arithmetic broadcasts over those dimensions.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np

from .errors import SingularityError

SNAP_TOL = 1e-14
# leading numerator coefficients below this fraction of the jet's scale count as zero
POLE_RTOL = 1e-8


def snap_center(r0):
    """Map centres within ``SNAP_TOL`` of 0 or pi onto those exact values."""
    r0 = np.asarray(r0, dtype=float)
    r0 = np.where(np.abs(r0) <= SNAP_TOL, 0.0, r0)
    return np.where(np.abs(r0 - math.pi) <= SNAP_TOL, math.pi, r0)


class Jet:
    """Taylor coefficients ``coeffs[k]`` of order ``k`` about ``center``."""

    __slots__ = ("center", "coeffs")

    def __init__(self, center, coeffs):
        self.center = np.asarray(center, dtype=float)
        c = np.array(coeffs, dtype=float)
        if c.ndim == 0:
            c = c[None]
        self.coeffs = c

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def value(self):
        a0 = self.coeffs[0]
        return float(a0) if np.ndim(a0) == 0 else a0

    def __repr__(self) -> str:
        return f"Jet(center={self.center}, coeffs={self.coeffs})"

    @classmethod
    def constant(cls, center, c, order: int) -> Jet:
        c = np.asarray(c, dtype=float)
        coeffs = np.zeros((order + 1,) + c.shape)
        coeffs[0] = c
        return cls(center, coeffs)

    @classmethod
    def variable(cls, center, order: int) -> Jet:
        """The identity function r, expanded about ``center``."""
        center = np.asarray(center, dtype=float)
        coeffs = np.zeros((order + 1,) + center.shape)
        coeffs[0] = center
        if order >= 1:
            coeffs[1] = 1.0
        return cls(center, coeffs)

    def _check(self, other: Jet) -> None:
        if self.center.shape != other.center.shape or not np.all(self.center == other.center):
            raise ValueError("jets expanded about different centres")

    def truncate(self, order: int) -> Jet:
        return Jet(self.center, self.coeffs[: order + 1])

    def _coerce(self, other) -> Jet:
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant(self.center, other, self.order)

    def __add__(self, other) -> Jet:
        other = self._coerce(other)
        d = min(self.order, other.order)
        a, b = _align(self.coeffs[: d + 1], other.coeffs[: d + 1])
        return Jet(self.center, a + b)

    __radd__ = __add__

    def __neg__(self) -> Jet:
        return Jet(self.center, -self.coeffs)

    def __sub__(self, other) -> Jet:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> Jet:
        return (-self) + other

    def __mul__(self, other) -> Jet:
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.center, _align(self.coeffs, other[None])[0] * other)
        self._check(other)
        d = min(self.order, other.order)
        a, b = _align(self.coeffs[: d + 1], other.coeffs[: d + 1])
        out = np.zeros(np.broadcast_shapes(a[: d + 1].shape, b[: d + 1].shape))
        for k in range(d + 1):
            out[k] = sum(a[j] * b[k - j] for j in range(k + 1))
        return Jet(self.center, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Jet:
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.center, _align(self.coeffs, other[None])[0] / other)
        self._check(other)
        return _divide(self, other)

    def derivative(self) -> Jet:
        """d/dr, one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return Jet(self.center, k * self.coeffs[1:])

    def evaluate(self, offset):
        """Sum the truncated series at ``center + offset`` (Horner)."""
        offset = np.asarray(offset, dtype=float)
        acc = self.coeffs[-1] * np.ones_like(offset)
        for a in self.coeffs[-2::-1]:
            acc = acc * offset + a
        return acc

    def compose_into(self, inner: Jet) -> Jet:
        """Treat ``self`` as a series in ``x - x0`` and substitute ``x = inner(r)``.

        ``inner`` must satisfy ``inner.coeffs[0] == x0``; only its
        non-constant part is used.
        """
        shift = Jet(inner.center, np.concatenate([np.zeros_like(inner.coeffs[:1]), inner.coeffs[1:]]))
        acc = Jet.constant(inner.center, self.coeffs[-1], inner.order)
        for a in self.coeffs[-2::-1]:
            acc = acc * shift + Jet.constant(inner.center, a, inner.order)
        return acc


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left-pad batch dimensions so that coefficient arrays broadcast per order."""
    nd = max(a.ndim, b.ndim)
    a = a.reshape(a.shape[:1] + (1,) * (nd - a.ndim) + a.shape[1:])
    b = b.reshape(b.shape[:1] + (1,) * (nd - b.ndim) + b.shape[1:])
    return a, b


def _vanishing_order(coeffs: np.ndarray, rtol: float) -> int:
    scale = np.max(np.abs(coeffs), axis=0)
    v = 0
    while v < coeffs.shape[0] and np.all(np.abs(coeffs[v]) <= rtol * scale):
        v += 1
    return v


def _divide(a: Jet, b: Jet) -> Jet:
    vb = _vanishing_order(b.coeffs, 0.0)
    if vb > b.order:
        raise SingularityError("division by an identically vanishing jet")
    if vb:
        va = _vanishing_order(a.coeffs, POLE_RTOL)
        if va < vb:
            raise SingularityError(
                f"pole: numerator vanishes to order {va} < denominator order {vb}"
            )
    num, den = _align(a.coeffs[vb:], b.coeffs[vb:])
    d = min(num.shape[0], den.shape[0]) - 1
    out = np.zeros(np.broadcast_shapes(num[: d + 1].shape, den[: d + 1].shape))
    for k in range(d + 1):
        acc = num[k] - sum(den[j] * out[k - j] for j in range(1, k + 1))
        out[k] = acc / den[0]
    return Jet(a.center, out)


def jet_arith(a: Jet, b: Jet, op: Literal["add", "sub", "mul", "div"]) -> Jet:
    ops = {"add": Jet.__add__, "sub": Jet.__sub__, "mul": Jet.__mul__, "div": Jet.__truediv__}
    if op not in ops:
        raise ValueError(f"unknown jet operation {op!r}")
    if not (isinstance(a, Jet) and isinstance(b, Jet)):
        raise TypeError("jet_arith expects two Jets")
    return ops[op](a, b)


def _trig_coeffs(center, order: int, hyperbolic: bool, start_with_sin: bool) -> np.ndarray:
    center = snap_center(center)
    if hyperbolic:
        s, c = np.sinh(center), np.cosh(center)
        cycle = [s, c] if start_with_sin else [c, s]
        derivs = [cycle[k % 2] for k in range(order + 1)]
    else:
        s, c = np.sin(center), np.cos(center)
        # exact values at the snapped centres 0 and pi
        s = np.where((center == 0.0) | (center == math.pi), 0.0, s)
        c = np.where(center == 0.0, 1.0, np.where(center == math.pi, -1.0, c))
        cycle = [s, c, -s, -c] if start_with_sin else [c, -s, -c, s]
        derivs = [cycle[k % 4] for k in range(order + 1)]
    return np.stack([d / math.factorial(k) for k, d in enumerate(derivs)])


def sin_jet(center, order: int) -> Jet:
    return Jet(snap_center(center), _trig_coeffs(center, order, False, True))


def cos_jet(center, order: int) -> Jet:
    return Jet(snap_center(center), _trig_coeffs(center, order, False, False))


def sinh_jet(center, order: int) -> Jet:
    return Jet(snap_center(center), _trig_coeffs(center, order, True, True))


def cosh_jet(center, order: int) -> Jet:
    return Jet(snap_center(center), _trig_coeffs(center, order, True, False))


def gaussian_jet(center, order: int, c, t) -> Jet:
    """Jet of exp(-(r + c)^2 / (4 t)) about ``center``; ``c`` and ``t`` broadcast."""
    center = snap_center(center)
    x = center + np.asarray(c, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    coeffs = np.empty((order + 1,) + x.shape)
    coeffs[0] = np.exp(-(x * x) / (4.0 * t))
    # g' = -(x + h) g / (2 t)  =>  (k+1) a_{k+1} = -(x a_k + a_{k-1}) / (2 t)
    prev = np.zeros_like(x)
    for k in range(order):
        nxt = -(x * coeffs[k] + prev) / (2.0 * t * (k + 1))
        prev = coeffs[k]
        coeffs[k + 1] = nxt
    return Jet(center, coeffs)


def jet_elementary(kind: str, center, order: int, c: float = 0.0, t: float = 1.0) -> Jet:
    """Named analytic function expanded about ``center``."""
    if order < 0:
        raise ValueError("order must be >= 0")
    builders = {"sin": sin_jet, "cos": cos_jet, "sinh": sinh_jet, "cosh": cosh_jet}
    if kind in builders:
        return builders[kind](center, order)
    if kind == "gaussian":
        if np.any(np.asarray(t) <= 0):
            raise ValueError("gaussian jet needs t > 0")
        return gaussian_jet(center, order, c, t)
    raise ValueError(f"unknown elementary function {kind!r}")


def ladder_apply(f: Jet, s: Jet, negate: bool = True) -> Jet:
    """Return -(1/s) df/dr (or +(1/s) df/dr when ``negate`` is false)."""
    if f.order < 1:
        raise ValueError("ladder_apply needs a jet of order >= 1")
    q = f.derivative() / s.truncate(f.order - 1)
    return -q if negate else q
