"""Closed-form kernels: Euclidean Gaussians, the circle kernel as a wrapped
Gaussian, and the odd-dimensional sphere and hyperbolic kernels obtained by
iterating the radial ladder operator on one-dimensional kernels."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .core import Kind, KernelEvaluator, SpaceForm, as_output
from .errors import DomainError, TruncationError
from .jets import Jet, cos_jet, gaussian_jet, ladder_apply, sin_jet, sinh_jet, snap_center
from .quadrature import composite_rule

TWO_PI = 2.0 * math.pi
MIN_T = 1e-4
# jets are centred exactly at 0 / pi and summed as Taylor series when the
# evaluation point lies within this many sqrt(t) of the centre
SNAP_SQRT_T = 0.5
# above this time the circle kernel is summed as its Fourier series
FOURIER_SWITCH = 0.25
# odd-sphere kernels use the Chebyshev form above 0.2 / (1 + max(0, m - 2) / 3):
# image-sum roundoff grows like exp(m^2 t), Chebyshev cancellation like exp(pi^2 / 4t)
CHEBYSHEV_SWITCH = 0.2
SNAP_MAX = 0.05
SNAP_EXTRA_ORDER = 20
GUARD = 2


@dataclass(frozen=True)
class ThetaTruncation:
    """Truncation policy for the image sum of the wrapped Gaussian."""

    tol: float = 1e-18
    max_terms: int = 20001

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def tail_bound(self, t: float, K: int) -> float:
        d = (2 * K - 1) * math.pi
        return 2.0 / math.sqrt(4 * math.pi * t) * math.exp(-d * d / (4 * t)) / (
            -math.expm1(-math.pi**2 / t)
        )

    def images(self, t) -> int:
        """Smallest K whose Gaussian tail bound is below ``tol`` for every t given."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        K = 1
        for tt in (float(t_arr.min()), float(t_arr.max())):
            while self.tail_bound(tt, K) >= self.tol:
                K += 1
                if 2 * K + 2 > self.max_terms:
                    raise TruncationError(
                        "theta series needs more images than allowed", 2 * K + 2, self.tail_bound(tt, K)
                    )
        return K


DEFAULT_THETA = ThetaTruncation()


def _check_t(t, min_t: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~(t >= min_t)):
        raise DomainError(f"time must be >= {min_t:g} for this evaluator")
    return t


def euclid_kernel(n: int, t, r):
    """Gaussian heat kernel of R^n."""
    if n < 1:
        raise DomainError("dimension must be >= 1")
    t = _check_t(t, 0.0 + np.finfo(float).tiny)
    r = np.asarray(r, dtype=float)
    return as_output((4 * math.pi * t) ** (-n / 2) * np.exp(-(r * r) / (4 * t)))


def _fourier_coeffs(t: np.ndarray, r0, order: int, trunc: ThetaTruncation) -> np.ndarray:
    """Jet coefficients of (1 + 2 sum_k exp(-k^2 t) cos(k r)) / (2 pi), for large t."""
    t_min = float(np.min(t))
    K = max(1, math.ceil(math.sqrt(-math.log(trunc.tol) / t_min)))
    r0, t = np.broadcast_arrays(np.asarray(r0, dtype=float), t)
    acc = None
    for k in range(K, 0, -1):
        cj = cos_jet(k * r0, order).coeffs
        scale = (float(k) ** np.arange(order + 1)).reshape((-1,) + (1,) * (cj.ndim - 1))
        term = 2.0 * np.exp(-k * k * t) * cj * scale
        acc = term if acc is None else acc + term
    acc[0] = acc[0] + 1.0
    return acc / TWO_PI


def circle_kernel_jet(t, r0, order: int, trunc: ThetaTruncation = DEFAULT_THETA) -> Jet:
    """Jet of the circle kernel about ``r0`` (any real; reduced by periodicity and evenness).

    For t >= ``FOURIER_SWITCH`` the Fourier series replaces the image sum.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("time must be positive")
    r0 = np.asarray(r0, dtype=float)
    red = np.mod(r0, TWO_PI)
    flip = red > math.pi
    red = snap_center(np.where(flip, TWO_PI - red, red))
    fourier = t >= FOURIER_SWITCH
    coeffs = None
    if np.any(~fourier):
        K = trunc.images(t[~fourier])
        # images paired as (k, -k-1): exact cancellation of odd terms at r0 = pi
        total = None
        for k in range(K + 1):
            pair = gaussian_jet(red, order, TWO_PI * k, t) + gaussian_jet(red, order, -TWO_PI * (k + 1), t)
            total = pair if total is None else total + pair
        coeffs = total.coeffs / np.sqrt(4 * math.pi * t)
    if np.any(fourier):
        dual = _fourier_coeffs(t, red, order, trunc)
        coeffs = dual if coeffs is None else np.where(fourier, dual, coeffs)
    if np.any(flip):
        sign = np.where(np.arange(order + 1) % 2 == 1, -1.0, 1.0)
        sign = sign.reshape((-1,) + (1,) * (coeffs.ndim - 1))
        coeffs = np.where(flip, coeffs * sign, coeffs)
    return Jet(np.where(flip, r0, red), coeffs)


class _LadderKernel(KernelEvaluator):
    """Odd-dimensional kernel ``scale(t) * (sign * (1/s) d/dr)^m`` of a base kernel."""

    has_jet = True
    singular_centers: tuple[float, ...] = (0.0,)

    def __init__(self, space: SpaceForm, m: int, *, include_exponential: bool = True,
                 ladder_prefactor: float = 1.0 / TWO_PI, ladder_sign: int = 1,
                 min_t: float = MIN_T):
        super().__init__(space)
        if m < 0:
            raise DomainError("ladder depth m must be >= 0")
        self.m = m
        self.include_exponential = include_exponential
        self.ladder_prefactor = ladder_prefactor
        self.ladder_sign = ladder_sign
        self.min_t = min_t

    # subclass hooks
    def _base_jet(self, t, center, order: int) -> Jet:
        raise NotImplementedError

    def _warp_jet(self, center, order: int) -> Jet:
        raise NotImplementedError

    def _exp_rate(self) -> int:
        raise NotImplementedError

    def with_min_t(self, min_t: float) -> _LadderKernel:
        """Copy of this evaluator accepting times down to ``min_t``."""
        clone = copy.copy(self)
        clone.min_t = min_t
        return clone

    def scale(self, t):
        s = self.ladder_prefactor**self.m
        if self.include_exponential:
            s = s * np.exp(self._exp_rate() * self.m * self.m * t)
        return s

    def _ladder_jet(self, t, center, order: int, singular: bool) -> Jet:
        m = self.m
        base_order = order + (2 * m if singular else m)
        f = self._base_jet(t, center, base_order)
        s = self._warp_jet(center, base_order)
        for _ in range(m):
            f = ladder_apply(f, s.truncate(f.order), negate=self.ladder_sign > 0)
        f = f.truncate(order)
        return Jet(f.center, f.coeffs * self.scale(t))

    def radial_jet(self, t: float, r0: float, order: int) -> Jet:
        t = _check_t(t, self.min_t)
        self.space.check_r(r0)
        r0 = float(snap_center(r0)) if self.space.kind is Kind.SPHERE else float(r0)
        singular = r0 in self.singular_centers
        return self._ladder_jet(t, r0, order, singular)

    def value(self, t, r):
        t = _check_t(t, self.min_t)
        r = np.asarray(r, dtype=float)
        self.space.check_r(r)
        t, r = np.broadcast_arrays(t, r)
        out = np.empty(t.shape)
        snap = np.minimum(SNAP_MAX, SNAP_SQRT_T * np.sqrt(t))
        done = np.zeros(t.shape, dtype=bool)
        for c in self.singular_centers:
            near = np.abs(r - c) <= snap
            if np.any(near):
                jet = self._ladder_jet(t[near], c, GUARD + SNAP_EXTRA_ORDER, singular=True)
                out[near] = jet.evaluate(r[near] - c)
                done |= near
        rest = ~done
        if np.any(rest):
            jet = self._ladder_jet(t[rest], r[rest], GUARD, singular=False)
            out[rest] = jet.coeffs[0]
        return as_output(out)


class SphereOddKernel(_LadderKernel):
    """Heat kernel of S^(2m+1) from the wrapped Gaussian on the circle.

    For t >= :meth:`chebyshev_switch` the circle kernel is taken as its
    Fourier series.  Each ladder step is d/dx in x = cos r, so the kernel becomes
    ``scale(t) / pi * sum_k exp(-k^2 t) T_k^(m)(cos r)`` with Chebyshev
    polynomials T_k, which needs no division by sin r.
    """

    method = "closed_form"
    singular_centers = (0.0, math.pi)

    def __init__(self, m: int, trunc: ThetaTruncation = DEFAULT_THETA, **kwargs):
        super().__init__(SpaceForm(Kind.SPHERE, 2 * m + 1), m, **kwargs)
        self.trunc = trunc

    def _base_jet(self, t, center, order):
        return circle_kernel_jet(t, center, order, self.trunc)

    def _warp_jet(self, center, order):
        return sin_jet(center, order)

    def _exp_rate(self) -> int:
        return 1

    def chebyshev_switch(self) -> float:
        return CHEBYSHEV_SWITCH / (1 + max(0, self.m - 2) / 3)

    def _chebyshev_derivatives(self, t: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
        """Scaled x-derivatives D_j / j!, j = 0..order, of sum_k exp(-k^2 t) T_k^(m)(x)."""
        K = self.m + order + math.ceil(math.sqrt(-math.log(self.trunc.tol) / float(np.min(t))))
        k = np.arange(K + 1).reshape((-1,) + (1,) * t.ndim)
        # fold exp(m^2 t) into the modes; k < m are annihilated by the m derivatives
        rate = self.m * self.m if self.include_exponential else 0
        c = np.where(k >= self.m, np.exp(-np.maximum(k * k - rate, 0) * t), 0.0)
        c = cheb.chebder(c, self.m, axis=0) if self.m else c
        out = np.empty((order + 1,) + t.shape)
        for j in range(order + 1):
            out[j] = cheb.chebval(x, c, tensor=False) / math.factorial(j)
            if j < order:
                c = cheb.chebder(c, 1, axis=0)
        sign = 1.0 if self.ladder_sign > 0 else (-1.0) ** self.m
        return out * (sign / math.pi) * self.ladder_prefactor**self.m

    def radial_jet(self, t: float, r0: float, order: int) -> Jet:
        t = _check_t(t, self.min_t)
        if np.all(t < self.chebyshev_switch()):
            return super().radial_jet(t, r0, order)
        self.space.check_r(r0)
        inner = cos_jet(r0, order)
        t, x0 = np.broadcast_arrays(t, inner.coeffs[0])
        xjet = Jet(inner.center, self._chebyshev_derivatives(t, x0, order))
        return xjet.compose_into(inner)

    def value(self, t, r):
        t = _check_t(t, self.min_t)
        r = np.asarray(r, dtype=float)
        self.space.check_r(r)
        t, r = np.broadcast_arrays(t, r)
        big = t >= self.chebyshev_switch()
        if not np.any(big):
            return super().value(t, r)
        out = np.empty(t.shape)
        out[big] = self._chebyshev_derivatives(t[big], np.cos(r[big]), 0)[0]
        if np.any(~big):
            out[~big] = super().value(t[~big], r[~big])
        return as_output(out)


class HyperbolicOddKernel(_LadderKernel):
    """Heat kernel of H^(2m+1) from the line kernel K_1 = H_1."""

    method = "closed_form"
    singular_centers = (0.0,)

    def __init__(self, m: int, **kwargs):
        super().__init__(SpaceForm(Kind.HYPERBOLIC, 2 * m + 1), m, **kwargs)

    def _base_jet(self, t, center, order):
        g = gaussian_jet(center, order, 0.0, t)
        return Jet(g.center, g.coeffs / np.sqrt(4 * math.pi * np.asarray(t, dtype=float)))

    def _warp_jet(self, center, order):
        return sinh_jet(center, order)

    def _exp_rate(self) -> int:
        return -1


class EuclidKernel(KernelEvaluator):
    has_jet = True
    has_time_derivative = True
    method = "closed_form"

    def __init__(self, n: int, prefactor: float = 1.0):
        super().__init__(SpaceForm(Kind.EUCLIDEAN, n))
        self.prefactor = prefactor

    def value(self, t, r):
        return as_output(self.prefactor * np.asarray(euclid_kernel(self.dim, t, r)))

    def radial_jet(self, t, r0, order):
        t = np.asarray(t, dtype=float)
        g = gaussian_jet(r0, order, 0.0, t)
        return Jet(g.center, self.prefactor * g.coeffs * (4 * math.pi * t) ** (-self.dim / 2))

    def time_derivative(self, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        return as_output(np.asarray(self.value(t, r)) * (r * r / (4 * t * t) - self.dim / (2 * t)))


def sphere_odd_kernel(m: int, t, r, trunc: ThetaTruncation = DEFAULT_THETA):
    """Heat kernel of S^(2m+1) at time ``t`` and distance ``r`` in [0, pi]."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return SphereOddKernel(m, trunc).value(t, r)


def hyperbolic_odd_kernel(m: int, t, r):
    """Heat kernel of H^(2m+1) at time ``t`` and distance ``r >= 0``."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return HyperbolicOddKernel(m).value(t, r)


def euclid_recurrence_identity(n: int, t: float, r: float, prefactor: float = 1.0 / TWO_PI,
                               nodes: int = 24) -> float:
    """Worst relative residual of the two dimension-shifting identities on R^n.

    The derivative form compares H_{n+2} against ``-prefactor / r * dH_n/dr``;
    the integral form recovers H_n from H_{n+1} after substituting
    ``u^2 = rho^2 - r^2``.
    """
    if not r > 0:
        raise DomainError("derivative identity needs r > 0")
    lower = EuclidKernel(n)
    dh = lower.radial_jet(t, r, 1).coeffs[1]
    upper = euclid_kernel(n + 2, t, r)
    res_derivative = abs(upper + prefactor / r * dh) / upper

    # Gaussian in u: integrate to 12 standard deviations
    u_max = 12.0 * math.sqrt(2 * t)
    u, w = composite_rule(np.linspace(0.0, u_max, 9), nodes)
    integral = 2.0 * np.dot(w, euclid_kernel(n + 1, t, np.sqrt(r * r + u * u)))
    target = euclid_kernel(n, t, r)
    res_integral = abs(target - integral) / target
    return float(max(res_derivative, res_integral))
