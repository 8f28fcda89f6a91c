"""Composite Gauss-Legendre rules: graded panels, panel doubling and a
tanh-sinh rule for endpoint singularities."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def composite_rule(breaks: Sequence[float], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre with ``n`` nodes on every panel between consecutive breaks."""
    b = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(n)
    a, h = b[:-1, None], np.diff(b)[:, None]
    return (a + h * x).ravel(), (h * w).ravel()


def geometric_breaks(a: float, b: float, levels: int, ratio: float = 0.5) -> np.ndarray:
    """Breakpoints on [a, b] refined geometrically toward ``a``."""
    offsets = (b - a) * ratio ** np.arange(levels, -1, -1)
    return np.concatenate([[a], a + offsets])


def graded_unit_rule(n: int, levels: int, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Reference rule on [0, 1] with panels graded toward 0."""
    return composite_rule(geometric_breaks(0.0, 1.0, levels, ratio), n)


def merge_breaks(*parts: Sequence[float], tol: float = 1e-15) -> np.ndarray:
    b = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in parts]))
    keep = np.concatenate([[True], np.diff(b) > tol * max(1.0, float(np.max(np.abs(b))))])
    return b[keep]


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breaks: Sequence[float],
    tol: float,
    n: int = 16,
    max_doublings: int = 10,
) -> tuple[float, float]:
    """Integrate a vectorised ``f`` by panel doubling.

    Every panel is bisected until two successive totals differ by less than
    ``tol / 4``.  Returns ``(value, last difference)``.
    """
    b = np.asarray(breaks, dtype=float)
    x, w = composite_rule(b, n)
    prev = float(np.dot(w, f(x)))
    for _ in range(max_doublings):
        b = np.sort(np.concatenate([b, (b[:-1] + b[1:]) / 2.0]))
        x, w = composite_rule(b, n)
        cur = float(np.dot(w, f(x)))
        diff = abs(cur - prev)
        if diff < tol / 4.0:
            return cur, diff
        prev = cur
    raise AccuracyError("panel doubling did not converge", diff)


def tanh_sinh_rule(a: float, b: float, n: int, h: float | None = None, s_max: float = 4.5):
    """Tanh-sinh nodes on (a, b).

    Returns ``(x, dist_a, dist_b, weights)`` where ``dist_a = x - a`` and
    ``dist_b = b - x`` are computed without cancellation, so integrands with
    endpoint singularities can be evaluated accurately.
    """
    # s_max = 4.5 puts the outermost nodes about 1e-60 from the ends, enough
    # for inverse square-root singularities
    if h is None:
        h = s_max / n
    k = np.arange(-n, n + 1)
    s = h * k
    u = 0.5 * math.pi * np.sinh(s)
    half = 0.5 * (b - a)
    # 1 - tanh(u) = 2 / (1 + exp(2u)), evaluated stably on both sides
    dist_b = half * 2.0 / (1.0 + np.exp(2.0 * u))
    dist_a = half * 2.0 / (1.0 + np.exp(-2.0 * u))
    x = a + dist_a
    with np.errstate(over="ignore"):
        weights = half * h * 0.5 * math.pi * np.cosh(s) / np.cosh(u) ** 2
    keep = (dist_a > 0) & (dist_b > 0) & (weights > 0)
    return x[keep], dist_a[keep], dist_b[keep], weights[keep]
