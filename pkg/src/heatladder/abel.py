"""Dimension-lowering integral recurrences.

Hyperbolic kernels descend one dimension through an Abel-type integral of
the kernel one dimension up.  On the sphere the same integral (the "main
term") misses a boundary contribution at the antipode, which is restored by a
Duhamel correction: a time convolution of the source
``A(s) = (n-1) exp(-(2n-1)s/4) kappa_{n+1}(s, pi)`` against the heat flow of
``sec(r_o / 2)`` on S^n.  Reading that identity as a Volterra equation in time
gives a marching solver for kappa_2 that never touches the spectrum.

Endpoint singularities ``(cosh rho - cosh r)^(-1/2)`` and
``(cos r - cos rho)^(-1/2)`` are removed by the substitution
``u^2 = cosh rho - cosh r`` (resp. ``cos r - cos rho``), after which the
integrand is smooth in ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.special import ellipkm1

from .core import Kind, KernelEvaluator, SpaceForm, as_output, sphere_volume
from .errors import AccuracyError, DomainError
from .quadrature import composite_rule, gauss_legendre, geometric_breaks, merge_breaks, tanh_sinh_rule
from .spectral import MIN_T as SPECTRAL_MIN_T
from .spectral import SphereSpectralKernel, sphere_kernel_spectral

SQRT2 = math.sqrt(2.0)
# below this time the Duhamel integrand uses the main term for kappa_n;
# the dropped correction is bounded by the source, about exp(-pi^2 / 4t) < 1e-21
HYBRID_SWITCH = 0.05
# the source A(s) is below 1e-25 (relative to its O(1) scale) for s < S_CUT
S_CUT = 0.04
# smallest sqrt-time node; [0, W_LO] is handled by its leading behaviour
W_LO = 1e-4
# Gaussian cut for the small-time main-term table: exp(-u^2 / 2t) at u^2 = 2t * 72
U_CUT_EXPONENT = 72.0
SMALL_T_FLOOR = 1e-12
BASE_NODES = 12
FINE_NODES = 12
FINE_LEVELS = 40


@dataclass(frozen=True)
class QuadratureSpec:
    """Policy for the Abel-type integrals.

    ``tol`` is relative: panels are doubled until two successive totals agree
    to ``tol``.  ``tail_cut`` sets the hyperbolic cutoff
    ``rho_max = r + tail_cut * sqrt(4 t) + 1``.
    """

    nodes: int = 16
    substitution: Literal["sqrt_endpoint", "tanh_sinh"] = "sqrt_endpoint"
    tail_cut: float = 8.0
    tol: float = 1e-13
    panels: int = 8
    max_doublings: int = 10

    def __post_init__(self) -> None:
        if self.nodes < 16:
            raise DomainError("QuadratureSpec.nodes must be >= 16")
        if not self.tail_cut >= 6:
            raise DomainError("QuadratureSpec.tail_cut must be >= 6")
        if self.substitution not in ("sqrt_endpoint", "tanh_sinh"):
            raise DomainError(f"unknown substitution {self.substitution!r}")
        if not self.tol > 0 or self.panels < 1:
            raise DomainError("tol must be positive and panels >= 1")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class TimeGrid:
    """Time levels ``t_k = t_end * (k/steps)`` (uniform) or ``t_end * (k/steps)^2`` (graded)."""

    t_end: float
    steps: int = 32
    spacing: Literal["uniform", "graded"] = "graded"

    def __post_init__(self) -> None:
        if not self.t_end > 0:
            raise DomainError("t_end must be positive")
        if self.steps < 8:
            raise DomainError("TimeGrid needs at least 8 steps")
        if self.spacing not in ("uniform", "graded"):
            raise DomainError(f"unknown spacing {self.spacing!r}")

    def times(self) -> np.ndarray:
        k = np.arange(self.steps + 1) / self.steps
        return self.t_end * (k * k if self.spacing == "graded" else k)


def _integrate(f: Callable[[np.ndarray], np.ndarray], breaks, q: QuadratureSpec) -> tuple[float, float]:
    """Composite Gauss-Legendre with panel doubling to relative tolerance ``q.tol``."""
    b = np.asarray(breaks, dtype=float)
    x, w = composite_rule(b, q.nodes)
    prev = float(np.dot(w, f(x)))
    diff = math.inf
    for _ in range(q.max_doublings):
        b = np.sort(np.concatenate([b, 0.5 * (b[:-1] + b[1:])]))
        x, w = composite_rule(b, q.nodes)
        cur = float(np.dot(w, f(x)))
        diff = abs(cur - prev)
        if diff <= q.tol * abs(cur) or cur == prev:
            return cur, diff
        prev = cur
    raise AccuracyError("Abel quadrature did not converge", diff)


def _tanh_sinh(g: Callable, a: float, b: float, q: QuadratureSpec) -> tuple[float, float]:
    """Tanh-sinh on (a, b) with step halving; ``g(x, dist_a, dist_b)``."""
    n = q.nodes
    x, da, db, w = tanh_sinh_rule(a, b, n)
    prev = float(np.dot(w, g(x, da, db)))
    diff = math.inf
    for _ in range(q.max_doublings):
        n *= 2
        x, da, db, w = tanh_sinh_rule(a, b, n)
        cur = float(np.dot(w, g(x, da, db)))
        diff = abs(cur - prev)
        if diff <= q.tol * abs(cur) or cur == prev:
            return cur, diff
        prev = cur
    raise AccuracyError("tanh-sinh quadrature did not converge", diff)


def _check_upper(upper: KernelEvaluator, kind: Kind, n: int) -> None:
    if upper.space.kind is not kind or upper.dim != n + 1:
        raise DomainError(f"upper evaluator must be the {kind.value} kernel of dimension {n + 1}")


# ---------------------------------------------------------------- hyperbolic

def hyper_descend(n: int, t: float, r: float, upper: KernelEvaluator,
                  q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """K_n(t, r) from K_{n+1} by the hyperbolic Abel integral."""
    if n < 1:
        raise DomainError("hyperbolic descent needs n >= 1")
    _check_upper(upper, Kind.HYPERBOLIC, n)
    t, r = float(t), float(r)
    if not t > 0:
        raise DomainError("time must be positive")
    SpaceForm(Kind.HYPERBOLIC, n).check_r(r)
    rho_max = r + q.tail_cut * math.sqrt(4 * t) + 1.0
    growth = math.exp((2 * n - 1) * t / 4)
    if q.substitution == "sqrt_endpoint":
        sh, ch = math.sinh(r), math.cosh(r)
        u_max = math.sqrt(2 * math.sinh((rho_max + r) / 2) * math.sinh((rho_max - r) / 2))

        def f(u):
            u2 = u * u
            return upper.value(t, np.arcsinh(np.sqrt(sh * sh + 2 * u2 * ch + u2 * u2)))

        # the integrand varies on u ~ sqrt(t sinh r); grade the panels toward u = 0
        levels = max(0, math.ceil(math.log2(u_max / math.sqrt(t * (1.0 + sh)))))
        breaks = merge_breaks(np.linspace(0.0, u_max, q.panels + 1), geometric_breaks(0.0, u_max, levels))
        val, _ = _integrate(f, breaks, q)
        tail = abs(float(f(np.array([u_max]))[0])) * u_max
        val *= 2 * SQRT2 * growth
        tail *= 2 * SQRT2 * growth
    else:
        def g(rho, da, db):
            den = np.sqrt(2 * np.sinh((rho + r) / 2) * np.sinh(da / 2))
            return upper.value(t, rho) * np.sinh(rho) / den

        val, _ = _tanh_sinh(g, r, rho_max, q)
        val *= SQRT2 * growth
        tail = 0.0
    if tail > q.tol * abs(val) and tail > 1e-300:
        raise AccuracyError("hyperbolic cutoff too short for requested tolerance", tail)
    return val


class HyperbolicDescentKernel(KernelEvaluator):
    """K_n on H^n obtained by Abel descent from an evaluator of K_{n+1}."""

    method = "abel"

    def __init__(self, n: int, upper: KernelEvaluator, q: QuadratureSpec = DEFAULT_QUAD):
        super().__init__(SpaceForm(Kind.HYPERBOLIC, n))
        _check_upper(upper, Kind.HYPERBOLIC, n)
        self.upper = upper
        self.q = q

    def value(self, t, r):
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        out = np.empty(t.shape)
        for idx in np.ndindex(t.shape):
            out[idx] = hyper_descend(self.dim, t[idx], r[idx], self.upper, self.q)
        return as_output(out)


# -------------------------------------------------------------- sphere, main

def _sphere_rho(u, sigma, u_max):
    """rho with cos(rho) = sigma - u^2, where u_max^2 = 1 + sigma."""
    sin_rho = np.sqrt(np.maximum((1 - sigma + u * u) * (u_max - u) * (u_max + u), 0.0))
    return np.arctan2(sin_rho, sigma - u * u)


def _check_sphere_args(n: int, t: float, r: float) -> None:
    if n < 2:
        raise DomainError("the sphere descent identity needs n >= 2")
    if not t > 0:
        raise DomainError("time must be positive")
    SpaceForm(Kind.SPHERE, n).check_r(r)


def sphere_descend_main(n: int, t: float, r: float, upper: KernelEvaluator,
                        q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Main (Abel) term of kappa_n(t, r) built from kappa_{n+1}."""
    t, r = float(t), float(r)
    _check_sphere_args(n, t, r)
    _check_upper(upper, Kind.SPHERE, n)
    if r == math.pi:
        return 0.0
    decay = math.exp(-(2 * n - 1) * t / 4)
    if q.substitution == "sqrt_endpoint":
        sigma = math.cos(r)
        u_max = SQRT2 * math.cos(r / 2)
        levels = max(0, math.ceil(math.log2(u_max / math.sqrt(t))))
        breaks = merge_breaks(np.linspace(0.0, u_max, q.panels + 1),
                              geometric_breaks(0.0, u_max, levels, 0.5))
        val, _ = _integrate(lambda u: upper.value(t, _sphere_rho(u, sigma, u_max)), breaks, q)
        return 2 * SQRT2 * decay * val

    def g(rho, da, db):
        den = np.sqrt(2 * np.sin((rho + r) / 2) * np.sin(da / 2))
        return upper.value(t, rho) * np.sin(rho) / den

    val, _ = _tanh_sinh(g, r, math.pi, q)
    return SQRT2 * decay * val


def sphere_main_at_zero(n: int, t: float, upper: KernelEvaluator,
                        q: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Main term at r = 0 written as 2 exp(-(2n-1)t/4) int_0^pi kappa_{n+1}(t, rho) cos(rho/2) drho."""
    _check_sphere_args(n, t, 0.0)
    _check_upper(upper, Kind.SPHERE, n)
    levels = max(0, math.ceil(math.log2(math.pi / math.sqrt(t))))
    breaks = merge_breaks(np.linspace(0.0, math.pi, q.panels + 1),
                          geometric_breaks(0.0, math.pi, levels, 0.5))
    val, _ = _integrate(lambda rho: upper.value(t, rho) * np.cos(rho / 2), breaks, q)
    return 2 * math.exp(-(2 * n - 1) * t / 4) * val


class SphereMainTermKernel(KernelEvaluator):
    """The main term alone, as an evaluator (it is not the kernel of S^n)."""

    method = "abel_main"

    def __init__(self, n: int, upper: KernelEvaluator, q: QuadratureSpec = DEFAULT_QUAD):
        super().__init__(SpaceForm(Kind.SPHERE, n))
        if n < 2:
            raise DomainError("the sphere descent identity needs n >= 2")
        _check_upper(upper, Kind.SPHERE, n)
        self.upper = upper
        self.q = q

    def value(self, t, r):
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        out = np.empty(t.shape)
        for idx in np.ndindex(t.shape):
            out[idx] = sphere_descend_main(self.dim, t[idx], r[idx], self.upper, self.q)
        return as_output(out)


def _small_time(upper: KernelEvaluator) -> KernelEvaluator:
    relax = getattr(upper, "with_min_t", None)
    return relax(SMALL_T_FLOOR) if relax is not None else upper


def main_term_table(n: int, upper: KernelEvaluator, taus, deltas, nodes: int = BASE_NODES,
                    panels: int = 8) -> np.ndarray:
    """Main term at every (tau, delta) pair with a fixed rule.

    The u-range is cut where the Gaussian envelope falls below exp(-72); this
    uses ``arccos(y - u^2)^2 >= arccos(y)^2 + 2 u^2``.  Returns shape
    ``(len(taus), len(deltas))``.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    xg, wg = composite_rule(np.linspace(0.0, 1.0, panels + 1), nodes)
    sigma = np.cos(deltas)
    u_max = SQRT2 * np.cos(deltas / 2)
    out = np.zeros((taus.size, deltas.size))
    for i, tau in enumerate(taus):
        live = (deltas * deltas / (4 * tau) < 745.0) & (u_max > 0)
        if not np.any(live):
            continue
        U = np.minimum(u_max[live], math.sqrt(2 * tau * U_CUT_EXPONENT))
        u = U[:, None] * xg[None, :]
        rho = _sphere_rho(u, sigma[live, None], u_max[live, None])
        vals = np.asarray(upper.value(tau, rho))
        out[i, live] = 2 * SQRT2 * math.exp(-(2 * n - 1) * tau / 4) * U * (vals @ wg)
    return out


# ------------------------------------------------------------ sphere, Duhamel

def _base_breaks() -> np.ndarray:
    return np.concatenate([[0.0], math.pi * 2.0 ** -np.arange(20, 0, -1), [0.75 * math.pi, math.pi]])


class _LagrangeBasis:
    """Piecewise Lagrange interpolation on Gauss-Legendre nodes of each panel."""

    def __init__(self, breaks: np.ndarray, m: int):
        self.breaks = np.asarray(breaks, dtype=float)
        self.m = m
        ref, _ = gauss_legendre(m)
        self.ref = ref
        diff = ref[:, None] - ref[None, :]
        np.fill_diagonal(diff, 1.0)
        self.bary = 1.0 / diff.prod(axis=1)
        a, h = self.breaks[:-1, None], np.diff(self.breaks)[:, None]
        self.nodes = (a + h * ref[None, :]).ravel()

    @property
    def size(self) -> int:
        return self.nodes.size

    def matrix(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.breaks) - 2)
        a, h = self.breaks[p], self.breaks[p + 1] - self.breaks[p]
        loc = (x - a) / h
        d = loc[:, None] - self.ref[None, :]
        hit = d == 0
        d = np.where(hit, 1.0, d)
        terms = self.bary[None, :] / d
        vals = terms / terms.sum(axis=1, keepdims=True)
        rows = hit.any(axis=1)
        vals[rows] = hit[rows].astype(float)
        out = np.zeros((x.size, self.size))
        cols = p[:, None] * self.m + np.arange(self.m)[None, :]
        np.put_along_axis(out, cols, vals, axis=1)
        return out


class _HatBasis:
    """Piecewise linear interpolation on the given nodes."""

    def __init__(self, nodes: np.ndarray):
        self.nodes = np.asarray(nodes, dtype=float)
        self.breaks = self.nodes

    @property
    def size(self) -> int:
        return self.nodes.size

    def matrix(self, x: np.ndarray) -> np.ndarray:
        eye = np.eye(self.size)
        return np.stack([np.interp(x, self.nodes, eye[l]) for l in range(self.size)], axis=1)


def _fine_rule(breaks: np.ndarray, singular: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule over ``breaks`` graded geometrically toward a singular point."""
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        h = b - a
        if singular is not None and a < singular < b:
            left = singular - geometric_breaks(0.0, singular - a, FINE_LEVELS, 0.5)[::-1]
            right = geometric_breaks(singular, b, FINE_LEVELS, 0.5)
            sub = np.concatenate([left, right[1:]])
        elif singular is not None and min(abs(singular - a), abs(singular - b)) < h:
            d = min(abs(singular - a), abs(singular - b))
            levels = min(FINE_LEVELS, max(1, math.ceil(math.log2(h / max(d, 1e-300))) + 2))
            if abs(singular - a) <= abs(singular - b):
                sub = geometric_breaks(a, b, levels, 0.5)
            else:
                sub = b - geometric_breaks(0.0, h, levels, 0.5)[::-1]
        else:
            sub = np.array([a, a + h / 2, b])
        x, w = composite_rule(sub, FINE_NODES)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def duhamel_angular_kernel(n: int, r: float, delta) -> np.ndarray:
    """G_n(r, delta) = int_0^pi sec(d/2) sin^(n-2)(phi) dphi with d the cosine-law distance.

    For n = 2 this is ``2 / |cos((r-delta)/2)| * K(m)`` with complementary
    parameter ``1 - m = cos^2((r+delta)/2) / cos^2((r-delta)/2)``; the
    logarithmic singularity sits at ``delta = pi - r``.
    """
    delta = np.asarray(delta, dtype=float)
    cp = np.cos((r + delta) / 2)
    cm = np.cos((r - delta) / 2)
    if n == 2:
        return 2.0 / np.abs(cm) * ellipkm1((cp / cm) ** 2)
    # psi = pi - phi; sec(d/2) = 1 / sqrt(cp^2 + sin r sin delta sin^2(psi/2))
    psi, w = composite_rule(geometric_breaks(0.0, math.pi, 30, 0.5), FINE_NODES)
    b = np.sin(r) * np.sin(delta)
    den = np.sqrt(cp[..., None] ** 2 + b[..., None] * np.sin(psi / 2) ** 2)
    return (np.sin(psi) ** (n - 2) / den) @ w


class _DuhamelOperator:
    """Discretisation shared by the correction integral and the Volterra solver.

    ``V(tau, r) = int_{S^n} kappa_n(tau, d(x, y)) sec(r(o, y)/2) dV(y)`` is
    computed in polar coordinates about the evaluation point, by product
    integration of a piecewise-polynomial interpolant of ``kappa_n(tau, .)``
    against the tau-independent weight ``omega_{n-2} sin^(n-1) delta G_n(r, delta)``.
    """

    def __init__(self, n: int, upper: KernelEvaluator, same_dim: KernelEvaluator | None,
                 switch: float = HYBRID_SWITCH):
        self.n = n
        self.upper = upper
        self.upper_small = _small_time(upper)
        self.same_dim = same_dim
        self.switch = switch
        self.basis = _LagrangeBasis(_base_breaks(), BASE_NODES)

    def weight_matrix(self, r_values, basis=None) -> np.ndarray:
        """Rows ``M[r]`` with ``V(tau, r) = M[r] @ kappa_n(tau, basis.nodes)``."""
        basis = basis or self.basis
        n = self.n
        r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
        breaks = merge_breaks(self.basis.breaks, basis.breaks)
        omega = sphere_volume(n - 2)
        out = np.empty((r_values.size, basis.size))
        for i, r in enumerate(r_values):
            star = math.pi - r
            x, w = _fine_rule(breaks, star if 0.0 < star < math.pi else None)
            weight = np.sin(x) ** (n - 1) * duhamel_angular_kernel(n, r, x)
            out[i] = omega * (w * weight) @ basis.matrix(x)
        return out

    def explicit_row(self, where: Literal["zero", "pi"]) -> np.ndarray:
        """Weight row at r = 0 or r = pi from the half-angle forms, no angular kernel."""
        n = self.n
        x, w = _fine_rule(self.basis.breaks, None)
        s, c = np.sin(x / 2), np.cos(x / 2)
        if where == "zero":
            weight = s ** (n - 1) * c ** (n - 2)
        else:
            weight = s ** (n - 2) * c ** (n - 1)
        return 2 ** (n - 1) * sphere_volume(n - 1) * (w * weight) @ self.basis.matrix(x)

    def source(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        live = s > 0
        if np.any(live):
            n = self.n
            vals = np.asarray(self.upper_small.value(s[live], math.pi))
            out[live] = (n - 1) * np.exp(-(2 * n - 1) * s[live] / 4) * vals
        return out

    def main_table(self, taus) -> np.ndarray:
        return main_term_table(self.n, self.upper_small, taus, self.basis.nodes)

    def kappa_table(self, taus) -> np.ndarray:
        """kappa_n(tau, delta_i) on the base nodes.

        ``same_dim`` is used wherever it can be evaluated; below the switch
        time an evaluator without a small-time mode (the spectral series) is
        replaced by the main term.
        """
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        out = np.empty((taus.size, self.basis.size))
        low = taus < self.switch
        if np.any(low):
            if hasattr(self.same_dim, "with_min_t"):
                small = self.same_dim.with_min_t(SMALL_T_FLOOR)
                out[low] = small.value(taus[low][:, None], self.basis.nodes[None, :])
            else:
                out[low] = self.main_table(taus[low])
        if np.any(~low):
            hi = taus[~low][:, None]
            d = self.basis.nodes[None, :]
            if isinstance(self.same_dim, SphereSpectralKernel):
                out[~low] = sphere_kernel_spectral(self.n, hi, d, self.same_dim.trunc, escalate=False)
            else:
                out[~low] = self.same_dim.value(hi, d)
        return out


def _sqrt_time_rule(w_hi: float, panels: int, nodes: int, graded: bool):
    """Nodes and weights on [w_lo, w_hi] plus w_lo; the piece [0, w_lo] is left to the caller."""
    uniform = np.linspace(0.0, w_hi, panels + 1)
    if not graded:
        x, w = composite_rule(uniform, nodes)
        return x, w, 0.0
    levels = max(1, round(math.log2(w_hi / W_LO)))
    geo = geometric_breaks(0.0, w_hi, levels, 0.5)
    w_lo = geo[1]
    breaks = merge_breaks(geo[1:], uniform[uniform > w_lo])
    x, w = composite_rule(breaks, nodes)
    return x, w, w_lo


def _correction_from_table(op: _DuhamelOperator, t: float, M: np.ndarray, grid: TimeGrid,
                           nodes: int) -> np.ndarray:
    """int_0^t A(s) V(t - s, r) ds for each row of M, in the variable w = sqrt(t - s)."""
    if t <= S_CUT:
        return np.zeros(M.shape[0])
    w_hi = math.sqrt(t - S_CUT)
    x, w, w_lo = _sqrt_time_rule(w_hi, grid.steps, nodes, grid.spacing == "graded")
    if w_lo > 0:
        x = np.append(x, w_lo)
        # leading behaviour on [0, w_lo]: 2 w V(w^2) tends to a constant (r = pi) or to 0
        w = np.append(w, w_lo)
    taus = x * x
    weights = op.source(t - taus) * 2 * x * w
    live = weights != 0
    V = op.kappa_table(taus[live]) @ M.T
    return weights[live] @ V


def sphere_duhamel_correction(n: int, t: float, r, upper: KernelEvaluator,
                              same_dim: KernelEvaluator | None = None,
                              q: QuadratureSpec = DEFAULT_QUAD, grid: TimeGrid | None = None,
                              check: bool = True, tol: float = 1e-7):
    """Duhamel correction term of the sphere descent identity at (t, r).

    ``same_dim`` supplies kappa_n at times ``tau >= HYBRID_SWITCH`` (default:
    the spectral series); below that the main term stands in for kappa_n.
    With ``check`` the time quadrature is repeated with half as many nodes per
    panel and an :class:`AccuracyError` is raised if the two differ by more
    than ``tol`` relative to the largest correction.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    _check_sphere_args(n, float(t), 0.0)
    SpaceForm(Kind.SPHERE, n).check_r(r_arr)
    _check_upper(upper, Kind.SPHERE, n)
    if same_dim is None:
        same_dim = SphereSpectralKernel(n)
    grid = grid or TimeGrid(float(t), 16, "graded")
    op = _DuhamelOperator(n, upper, same_dim)
    M = op.weight_matrix(r_arr)
    val = _correction_from_table(op, float(t), M, grid, q.nodes)
    if check and val.size:
        coarse = _correction_from_table(op, float(t), M, grid, q.nodes // 2)
        est = float(np.max(np.abs(val - coarse)))
        if est > tol * max(float(np.max(np.abs(val))), 1e-300):
            raise AccuracyError("Duhamel time quadrature did not reach tolerance", est)
    return as_output(val.reshape(np.shape(r)))


def sphere_descent_identity(n: int, t: float, r, upper: KernelEvaluator,
                            same_dim: KernelEvaluator | None = None,
                            q: QuadratureSpec = DEFAULT_QUAD, grid: TimeGrid | None = None):
    """kappa_n(t, r) as main term plus Duhamel correction."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    main = np.array([sphere_descend_main(n, t, ri, upper, q) for ri in r_arr])
    corr = np.atleast_1d(sphere_duhamel_correction(n, t, r_arr, upper, same_dim, q, grid))
    return as_output((main + corr).reshape(np.shape(r)))


def sphere_relation_at_zero(n: int, t: float, upper: KernelEvaluator,
                            same_dim: KernelEvaluator | None = None,
                            q: QuadratureSpec = DEFAULT_QUAD, grid: TimeGrid | None = None) -> float:
    """kappa_n(t, 0) from the r = 0 specialisation (half-angle weights, no angular kernel)."""
    _check_sphere_args(n, float(t), 0.0)
    op = _DuhamelOperator(n, upper, same_dim or SphereSpectralKernel(n))
    M = op.explicit_row("zero")[None, :]
    corr = _correction_from_table(op, float(t), M, grid or TimeGrid(float(t), 16), q.nodes)[0]
    return sphere_main_at_zero(n, t, upper, q) + corr


def sphere_relation_at_pi(n: int, t: float, upper: KernelEvaluator,
                          same_dim: KernelEvaluator | None = None,
                          q: QuadratureSpec = DEFAULT_QUAD, grid: TimeGrid | None = None) -> float:
    """kappa_n(t, pi) from the r = pi specialisation, where the main term vanishes."""
    _check_sphere_args(n, float(t), 0.0)
    op = _DuhamelOperator(n, upper, same_dim or SphereSpectralKernel(n))
    M = op.explicit_row("pi")[None, :]
    return float(_correction_from_table(op, float(t), M, grid or TimeGrid(float(t), 16), q.nodes)[0])


class SphereDescentKernel(KernelEvaluator):
    """kappa_n from kappa_{n+1} through the full descent identity (main + correction)."""

    method = "abel"

    def __init__(self, n: int, upper: KernelEvaluator, same_dim: KernelEvaluator | None = None,
                 q: QuadratureSpec = DEFAULT_QUAD):
        super().__init__(SpaceForm(Kind.SPHERE, n))
        if n < 2:
            raise DomainError("the sphere descent identity needs n >= 2")
        _check_upper(upper, Kind.SPHERE, n)
        self.upper, self.same_dim, self.q = upper, same_dim, q

    def value(self, t, r):
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        out = np.empty(t.shape)
        for tt in np.unique(t):
            sel = t == tt
            out[sel] = sphere_descent_identity(self.dim, tt, r[sel], self.upper, self.same_dim, self.q)
        return as_output(out)


# ----------------------------------------------------------------- Volterra

@dataclass(frozen=True)
class VolterraTable:
    """kappa_2 on a (t, r) grid with its main and correction parts.

    ``errors`` holds the a-posteriori comparison with the spectral series:
    ``row_max`` is max |difference| / max_r kappa_2 per time level, and
    ``relative`` the pointwise relative error where kappa_2 exceeds 1e-3 of
    its row maximum.
    """

    times: np.ndarray
    r: np.ndarray
    values: np.ndarray
    main: np.ndarray
    correction: np.ndarray
    errors: dict

    def rows(self):
        for i, t in enumerate(self.times):
            for j, r in enumerate(self.r):
                yield float(t), float(r), float(self.values[i, j])


def volterra_errors(times, r, values) -> dict:
    """Compare a kappa_2 table with the spectral series at every grid point."""
    times = np.asarray(times)
    ok = times >= SPECTRAL_MIN_T
    ref = np.asarray(sphere_kernel_spectral(2, times[ok, None], np.asarray(r)[None, :], escalate=False))
    diff = np.abs(values[ok] - ref)
    rowmax = np.max(np.abs(ref), axis=1, keepdims=True)
    big = np.abs(ref) > 1e-3 * rowmax
    return {
        "row_max": float(np.max(diff / rowmax)),
        "relative": float(np.max(np.where(big, diff / np.where(big, np.abs(ref), 1.0), 0.0))),
        "points": int(ok.sum() * len(r)),
    }


def sphere_volterra_solve(t_grid: TimeGrid, r_nodes: int = 32, upper: KernelEvaluator | None = None,
                          q: QuadratureSpec = DEFAULT_QUAD, tol: float = 5e-4,
                          check: bool = True, interpolation: Literal["linear", "cubic"] = "linear"
                          ) -> VolterraTable:
    """March kappa_2 over ``t_grid`` from the descent identity read as a Volterra equation.

    The unknown is the correction ``c = kappa_2 - main``.  At step k it is the
    time integral of the source against ``V_main + V_c``; ``V_main`` is exact
    (main term at the product-integration nodes) and ``V_c`` interpolates the
    already computed ``c`` linearly in time and in r (or with a cubic spline
    in r).  Levels with ``t <= S_CUT`` keep ``c = 0``; the dropped part is
    below the source bound there.  The last panel needs ``c(t_k)`` itself; it
    is predicted by ``c(t_{k-1})`` and corrected once, and its weight is of
    size ``A(t_k - t_{k-1})``, which is negligible on these grids.
    """
    from .closed_form import SphereOddKernel

    if r_nodes < 4:
        raise DomainError("need at least 4 r nodes")
    upper = upper or SphereOddKernel(1)
    _check_upper(upper, Kind.SPHERE, 2)
    times = t_grid.times()
    r = np.linspace(0.0, math.pi, r_nodes)
    N = t_grid.steps

    main = np.zeros((N + 1, r_nodes))
    for k in range(1, N + 1):
        main[k] = [sphere_descend_main(2, times[k], rj, upper, q) for rj in r]

    op = _DuhamelOperator(2, upper, None)
    M_base = op.weight_matrix(r)
    if interpolation == "linear":
        M_c = op.weight_matrix(r, _HatBasis(r))
    elif interpolation == "cubic":
        M_c = op.weight_matrix(r, _CubicBasis(r))
    else:
        raise DomainError(f"unknown interpolation {interpolation!r}")

    # sqrt-time panels aligned with the grid: panel j covers tau in [t_j, t_{j+1}]
    sq = np.sqrt(times)
    panel_x, panel_w = [], []
    for j in range(N):
        if j == 0:
            levels = max(1, round(math.log2(sq[1] / W_LO)))
            geo = geometric_breaks(0.0, sq[1], levels, 0.5)
            x, w = composite_rule(geo[1:], q.nodes)
            # leading behaviour on [0, w_lo] (see _correction_from_table)
            x, w = np.append(x, geo[1]), np.append(w, geo[1])
        else:
            x, w = composite_rule(sq[j:j + 2], q.nodes)
        panel_x.append(x)
        panel_w.append(w)
    all_x = np.concatenate(panel_x)
    V_main_all = op.main_table(all_x * all_x) @ M_base.T
    V_main, start = [], 0
    for x in panel_x:
        V_main.append(V_main_all[start:start + x.size])
        start += x.size

    corr = np.zeros((N + 1, r_nodes))
    for k in range(1, N + 1):
        if times[k] <= S_CUT:
            continue
        for _ in range(2):
            nxt = corr[k] if corr[k].any() else corr[k - 1]
            total = np.zeros(r_nodes)
            for j in range(k):
                x, w = panel_x[j], panel_w[j]
                tau = x * x
                weights = op.source(times[k] - tau) * 2 * x * w
                theta = np.clip((tau - times[j]) / (times[j + 1] - times[j]), 0.0, 1.0)
                upper_row = nxt if j + 1 == k else corr[j + 1]
                c = (1 - theta)[:, None] * corr[j][None, :] + theta[:, None] * upper_row[None, :]
                total += weights @ (V_main[j] + c @ M_c.T)
            corr[k] = total
    values = main + corr
    errors = volterra_errors(times[1:], r, values[1:]) if check else {}
    table = VolterraTable(times[1:], r, values[1:], main[1:], corr[1:], errors)
    if check and errors["row_max"] > tol:
        raise AccuracyError("Volterra grid too coarse for the requested tolerance", errors["row_max"])
    return table


class _CubicBasis:
    """Cubic spline interpolation with zero end slopes (radial functions are even at 0 and pi)."""

    def __init__(self, nodes: np.ndarray):
        from scipy.interpolate import CubicSpline

        self.nodes = np.asarray(nodes, dtype=float)
        self.breaks = self.nodes
        self._spline = CubicSpline(self.nodes, np.eye(self.nodes.size), bc_type="clamped")

    @property
    def size(self) -> int:
        return self.nodes.size

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return self._spline(x)
