"""Eigenfunction-expansion oracle for sphere heat kernels and heat traces.

The kernel of S^n is summed as a zonal series in normalised Gegenbauer
polynomials of cos r.  When the float sum cancels badly (small t, r near pi)
the affected points are recomputed with mpmath at a working precision chosen
from the observed cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .core import Kind, KernelEvaluator, SpaceForm, as_output, sphere_volume
from .errors import AccuracyError, DomainError, TruncationError
from .jets import Jet, cos_jet

MIN_T = 1e-4
# cancellation ratio sum|terms| / |sum| beyond which points are redone in mpmath
CANCELLATION_LIMIT = 1e3
MAX_DPS = 400


@dataclass(frozen=True)
class SpectralTruncation:
    tol: float = 1e-17
    k_max: int = 20000

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


DEFAULT_SPECTRAL = SpectralTruncation()


def eigenvalue(n: int, k: int) -> int:
    return k * (k + n - 1)


def multiplicity(n: int, k: int) -> int:
    """Dimension of the degree-k spherical harmonics on S^n."""
    if n < 2 or k < 0:
        raise DomainError("multiplicity needs n >= 2 and k >= 0")
    return (2 * k + n - 1) * math.comb(k + n - 2, k) // (n - 1)


def _check(n: int, t) -> np.ndarray:
    if n < 2:
        raise DomainError("spectral expansion needs n >= 2")
    t = np.asarray(t, dtype=float)
    if np.any(~(t >= MIN_T)):
        raise DomainError(f"spectral series needs t >= {MIN_T:g}")
    return t


def truncation_index(n: int, t: float, trunc: SpectralTruncation = DEFAULT_SPECTRAL,
                     derivative_order: int = 0) -> int:
    """Last degree K kept: the first K past the peak whose term bound is below tol."""
    k = 0
    while True:
        lam = eigenvalue(n, k)
        bound = multiplicity(n, k) * math.exp(-lam * t) * (1.0 + lam) ** derivative_order
        # term bounds are eventually decreasing; stop only on the decreasing side
        if bound < trunc.tol and eigenvalue(n, k + 1) * t > 2 * derivative_order + n:
            return k
        k += 1
        if k > trunc.k_max:
            raise TruncationError("zonal series did not reach tolerance", k, bound)


def zonal_ratios(n: int, K: int, x, shift: int = 0) -> np.ndarray:
    """Array of G_k(x) / G_k(1), k = 0..K, for Gegenbauer parameter (n-1)/2 + shift.

    Uses the three-term recurrence written directly for the normalised ratios:
    R_{k+1} = (2 (k + lam) x R_k - k R_{k-1}) / (k + 2 lam).
    """
    lam = (n - 1) / 2 + shift
    x = np.asarray(x, dtype=float)
    out = np.empty((K + 1,) + x.shape)
    out[0] = 1.0
    if K >= 1:
        out[1] = x
    for k in range(1, K):
        out[k + 1] = (2 * (k + lam) * x * out[k] - k * out[k - 1]) / (k + 2 * lam)
    return out


def zonal_ratio(n: int, k: int, x):
    """G_k(x) / G_k(1) for the Gegenbauer parameter (n-1)/2 (equals 1 at x = 1)."""
    if n < 2 or k < 0:
        raise DomainError("zonal_ratio needs n >= 2 and k >= 0")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise DomainError("x must lie in [-1, 1]")
    return as_output(zonal_ratios(n, k, x)[k])


def _weights(n: int, K: int, t: np.ndarray) -> np.ndarray:
    k = np.arange(K + 1)
    mult = np.array([float(multiplicity(n, j)) for j in k])
    lam = (k * (k + n - 1)).astype(float)
    return mult.reshape((-1,) + (1,) * t.ndim) * np.exp(-lam.reshape((-1,) + (1,) * t.ndim) * t)


def _mp_sum(n: int, t: float, r: float, dps: int, k_max: int) -> mpmath.mpf:
    """Zonal sum at ``dps`` digits, continued until the tail is negligible relative to the sum."""
    with mpmath.workdps(dps):
        x = mpmath.cos(mpmath.mpf(r))
        tt = mpmath.mpf(t)
        lam = mpmath.mpf(n - 1) / 2
        rel = mpmath.mpf(10) ** (-20)
        prev, cur = mpmath.mpf(1), x
        total = 1 + multiplicity(n, 1) * mpmath.exp(-eigenvalue(n, 1) * tt) * x
        k = 1
        while True:
            nxt = (2 * (k + lam) * x * cur - k * prev) / (k + 2 * lam)
            prev, cur = cur, nxt
            k += 1
            weight = multiplicity(n, k) * mpmath.exp(-eigenvalue(n, k) * tt)
            total += weight * cur
            # |ratio| <= 1, so the weight bounds the term; stop past the peak
            if eigenvalue(n, k) * t > n and weight < rel * abs(total):
                return total
            if k > k_max:
                raise TruncationError("zonal series did not reach relative tolerance", k, float(weight))


def _mp_kernel_sum(n: int, t: float, r: float, ratio: float, k_max: int) -> float:
    """High-precision zonal sum; precision grows until two levels agree to 1e-17."""
    dps = 30 + (int(math.log10(ratio)) if np.isfinite(ratio) else 30)
    while dps <= MAX_DPS:
        lo = _mp_sum(n, t, r, dps, k_max)
        hi = _mp_sum(n, t, r, dps + 20, k_max)
        if abs(lo - hi) <= mpmath.mpf(10) ** (-17) * abs(hi):
            return float(hi)
        dps += 40
    raise AccuracyError("zonal series cancels beyond the working precision limit", float(ratio))


def _series_sum(n: int, t, r, trunc: SpectralTruncation, escalate: bool = True) -> np.ndarray:
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    K = truncation_index(n, float(t.min()), trunc)
    R = zonal_ratios(n, K, np.cos(r))
    terms = _weights(n, K, t) * R
    total = terms.sum(axis=0)
    magnitude = np.abs(terms).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = magnitude / np.abs(total)
    bad = ~(ratio < CANCELLATION_LIMIT)
    if escalate and np.any(bad):
        total = np.array(total, copy=True)
        for idx in zip(*np.nonzero(bad)) if total.ndim else [()]:
            total[idx] = _mp_kernel_sum(n, float(t[idx]), float(r[idx]), float(ratio[idx]), trunc.k_max)
    return total


def sphere_kernel_spectral(n: int, t, r, trunc: SpectralTruncation = DEFAULT_SPECTRAL,
                           escalate: bool = True):
    """Heat kernel of S^n (n >= 2) from its zonal eigenfunction expansion.

    With ``escalate`` false the float sum is returned as is, which is accurate
    in absolute terms (to about 1e-16 times the largest term) but not
    relatively where the kernel is tiny.
    """
    t = _check(n, t)
    SpaceForm(Kind.SPHERE, n).check_r(r)
    return as_output(_series_sum(n, t, r, trunc, escalate) / sphere_volume(n))


def sphere_trace(n: int, t: float, trunc: SpectralTruncation = DEFAULT_SPECTRAL) -> float:
    """Heat trace sum_k mult(n, k) exp(-k (k + n - 1) t)."""
    _check(n, t)
    K = truncation_index(n, t, trunc)
    terms = [multiplicity(n, k) * math.exp(-eigenvalue(n, k) * t) for k in range(K + 1)]
    return math.fsum(terms)


def sphere_diagonal_spectral(n: int, t: float, trunc: SpectralTruncation = DEFAULT_SPECTRAL) -> float:
    return sphere_trace(n, t, trunc) / sphere_volume(n)


def _x_derivative_series(n: int, t: float, x0: float, order: int, trunc: SpectralTruncation) -> np.ndarray:
    """Scaled derivatives f^(j)(x0)/j! of the zonal series in x = cos r."""
    K = truncation_index(n, t, trunc, derivative_order=order)
    w = _weights(n, K, np.asarray(t, dtype=float))
    lam = (n - 1) / 2
    k = np.arange(K + 1)
    out = np.zeros(order + 1)
    factor = np.ones(K + 1)
    for j in range(order + 1):
        if j > 0:
            # d/dx R_k^{lam} = k (k + 2 lam) / (2 lam + 1) R_{k-1}^{lam + 1}
            factor = factor * np.maximum(k - (j - 1), 0) * (k + 2 * lam + (j - 1)) / (2 * lam + 2 * j - 1)
        R = zonal_ratios(n, K, x0, shift=j)
        shifted = np.zeros(K + 1)
        shifted[j:] = R[: K + 1 - j]
        out[j] = np.sum(w * factor * shifted) / math.factorial(j)
    return out


class SphereSpectralKernel(KernelEvaluator):
    """Sphere heat kernel evaluated from the zonal expansion."""

    has_jet = True
    method = "spectral"

    def __init__(self, n: int, trunc: SpectralTruncation = DEFAULT_SPECTRAL):
        super().__init__(SpaceForm(Kind.SPHERE, n))
        if n < 2:
            raise DomainError("spectral expansion needs n >= 2")
        self.trunc = trunc

    def value(self, t, r):
        return sphere_kernel_spectral(self.dim, t, r, self.trunc)

    def radial_jet(self, t: float, r0: float, order: int) -> Jet:
        _check(self.dim, t)
        inner = cos_jet(r0, order)
        xjet = Jet(inner.center, _x_derivative_series(self.dim, float(t), float(inner.coeffs[0]),
                                                        order, self.trunc))
        out = xjet.compose_into(inner)
        return Jet(out.center, out.coeffs / sphere_volume(self.dim))
