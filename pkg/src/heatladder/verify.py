"""Oracle harness: PDE residuals, normalisation, delta convergence, the upward
ladder recurrence and the semigroup property, all over :class:`KernelEvaluator`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .core import Kind, KernelEvaluator, SpaceForm, sphere_volume
from .errors import AccuracyError, DomainError
from .quadrature import composite_rule, geometric_breaks, integrate, merge_breaks

# fixed finite-difference steps, each with one Richardson level
H_R = 1e-3
H_T_REL = 1e-5


@dataclass
class ResidualReport:
    max_abs: float
    max_rel: float
    grid: list[tuple[float, float]]
    method: Literal["jet", "finite_difference"]

    def __post_init__(self) -> None:
        if not self.grid:
            raise DomainError("residual grid is empty")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _grid_points(grid) -> list[tuple[float, float]]:
    """Accept ``(ts, rs)`` for a tensor grid or an iterable of ``(t, r)`` pairs."""
    if isinstance(grid, tuple) and len(grid) == 2 and np.ndim(grid[0]) == 1 and np.ndim(grid[1]) == 1:
        return [(float(t), float(r)) for t in grid[0] for r in grid[1]]
    return [(float(t), float(r)) for t, r in grid]


def _richardson(d: Callable[[float], float], h: float) -> float:
    return (4.0 * d(h / 2) - d(h)) / 3.0


def radial_derivatives(k: KernelEvaluator, t: float, r: float, h: float = H_R) -> tuple[float, float, float, str]:
    """(f, f_r, f_rr) at (t, r) from a jet when available, else central differences."""
    if k.has_jet:
        c = k.radial_jet(t, r, 2).coeffs
        return float(c[0]), float(c[1]), 2.0 * float(c[2]), "jet"
    f0 = float(k.value(t, r))

    def d1(s):
        return (float(k.value(t, r + s)) - float(k.value(t, r - s))) / (2 * s)

    def d2(s):
        return (float(k.value(t, r + s)) - 2 * f0 + float(k.value(t, r - s))) / (s * s)

    return f0, _richardson(d1, h), _richardson(d2, h), "finite_difference"


def time_derivative(k: KernelEvaluator, t: float, r: float) -> float:
    if k.has_time_derivative:
        return float(k.time_derivative(t, r))

    def d(s):
        return (float(k.value(t + s, r)) - float(k.value(t - s, r))) / (2 * s)

    return _richardson(d, H_T_REL * t)


def _drift(space: SpaceForm, r: float) -> float:
    return float(space.radial_drift(r))


def _check_interior(space: SpaceForm, r: float, margin: float = 0.1) -> None:
    if r < margin or (space.kind is Kind.SPHERE and r > math.pi - margin):
        raise DomainError(f"grid point r={r} is within {margin} of a radial singularity")


def pde_residual(k: KernelEvaluator, space: SpaceForm | None = None, grid=None,
                 coordinate: Literal["r", "sigma"] = "r") -> ResidualReport:
    """Residual of the radial heat equation h_t = h_rr + (n-1) c(r) h_r.

    With ``coordinate="sigma"`` the operator is written in ``sigma = cosh r``
    (hyperbolic) or ``sigma = cos r`` (sphere) and differenced in sigma.
    """
    space = space or k.space
    pts = _grid_points(grid)
    worst_abs = worst_rel = 0.0
    method = "jet" if k.has_jet and coordinate == "r" else "finite_difference"
    for t, r in pts:
        _check_interior(space, r)
        ht = time_derivative(k, t, r)
        if coordinate == "r":
            f, fr, frr, method = radial_derivatives(k, t, r)
            lap = frr + _drift(space, r) * fr
        else:
            f, lap = _sigma_laplacian(k, space, t, r)
        res = abs(ht - lap)
        worst_abs = max(worst_abs, res)
        worst_rel = max(worst_rel, res / abs(f) if f != 0 else math.inf)
    return ResidualReport(worst_abs, worst_rel, pts, method)


def _sigma_laplacian(k: KernelEvaluator, space: SpaceForm, t: float, r: float) -> tuple[float, float]:
    n = space.dim
    if space.kind is Kind.HYPERBOLIC:
        sigma, to_r, a, b = math.cosh(r), np.arccosh, lambda s: s * s - 1, lambda s: n * s
    elif space.kind is Kind.SPHERE:
        sigma, to_r, a, b = math.cos(r), np.arccos, lambda s: 1 - s * s, lambda s: -n * s
    else:
        raise DomainError("the sigma form exists for the sphere and hyperbolic space only")
    h = H_R * math.sqrt(abs(a(sigma)))
    f0 = float(k.value(t, r))

    def g(s):
        return float(k.value(t, float(to_r(s))))

    d1 = _richardson(lambda s: (g(sigma + s) - g(sigma - s)) / (2 * s), h)
    d2 = _richardson(lambda s: (g(sigma + s) - 2 * f0 + g(sigma - s)) / (s * s), h)
    return f0, a(sigma) * d2 + b(sigma) * d1


def _radial_extent(space: SpaceForm, t: float) -> float:
    if space.kind is Kind.SPHERE:
        return math.pi
    # the mass sits near r = (n-1) t with Gaussian spread sqrt(2t)
    drift = (space.dim - 1) * t if space.kind is Kind.HYPERBOLIC else 0.0
    return drift + 24.0 * math.sqrt(t) + 1.0


def _radial_breaks(space: SpaceForm, t: float) -> np.ndarray:
    R = _radial_extent(space, t)
    levels = max(0, math.ceil(math.log2(R / math.sqrt(t))))
    return merge_breaks(np.linspace(0.0, R, 9), geometric_breaks(0.0, R, levels, 0.5))


def _mass_integral(k: KernelEvaluator, space: SpaceForm, t: float, f: Callable, tol: float) -> float:
    def integrand(r):
        return np.asarray(k.value(t, r)) * space.measure(r) * f(r)

    val, _ = integrate(integrand, _radial_breaks(space, t), tol)
    return val


def normalization(k: KernelEvaluator, space: SpaceForm | None = None, t: float = 0.5,
                  tol: float = 1e-10) -> float:
    """Total mass of the kernel at time t against the radial volume measure."""
    space = space or k.space
    if not t > 0:
        raise DomainError("time must be positive")
    return _mass_integral(k, space, t, lambda r: 1.0, tol)


TEST_FUNCTIONS: dict[str, Callable] = {
    "one": lambda r: np.ones_like(np.asarray(r, dtype=float)),
    "cos": np.cos,
    "gauss": lambda r: np.exp(-np.asarray(r) ** 2),
}


def delta_convergence(k: KernelEvaluator, space: SpaceForm | None = None, f: str | Callable = "cos",
                      t_sequence: Sequence[float] = (0.2, 0.1, 0.05), tol: float = 1e-10) -> list[float]:
    """|int k(t, r) f(r) dmu - f(0)| for each t in a decreasing sequence."""
    space = space or k.space
    ts = [float(t) for t in t_sequence]
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise DomainError("t_sequence must be strictly decreasing")
    if min(ts) < 0.02:
        raise DomainError("delta convergence is checked for t >= 0.02")
    func = TEST_FUNCTIONS[f] if isinstance(f, str) else f
    f0 = float(func(np.array(0.0)))
    return [abs(_mass_integral(k, space, t, func, tol) - f0) for t in ts]


def ladder_prefactor(space: SpaceForm, t: float) -> float:
    """exp(+-n t) / (2 pi) for the sphere / hyperbolic ladder, 1/(2 pi) for Euclidean space."""
    n = space.dim
    return math.exp(space.kind.curvature * n * t) / (2 * math.pi)


def up_recurrence_residual(lower: KernelEvaluator, upper: KernelEvaluator, space: SpaceForm | None = None,
                           grid=None) -> ResidualReport:
    """Residual of upper - prefactor(t) * (-1/s(r)) d/dr lower, relative to upper."""
    space = space or lower.space
    if upper.space.kind is not space.kind or upper.dim != space.dim + 2:
        raise DomainError("upper must live in dimension n + 2 of the same geometry")
    pts = _grid_points(grid)
    worst_abs = worst_rel = 0.0
    method = "finite_difference"
    for t, r in pts:
        _check_interior(space, r)
        _, fr, _, method = radial_derivatives(lower, t, r)
        predicted = -ladder_prefactor(space, t) * fr / float(space.warp(r))
        actual = float(upper.value(t, r))
        res = abs(actual - predicted)
        worst_abs = max(worst_abs, res)
        worst_rel = max(worst_rel, res / abs(actual) if actual != 0 else math.inf)
    return ResidualReport(worst_abs, worst_rel, pts, method)


def semigroup_residual(k: KernelEvaluator, n: int, t: float, s: float, r: float,
                       tol: float = 1e-10, max_doublings: int = 6) -> float:
    """Relative Chapman-Kolmogorov residual on S^n via the cosine-law distance."""
    if n < 2:
        raise DomainError("semigroup check needs n >= 2")
    if k.space.kind is not Kind.SPHERE:
        raise DomainError("semigroup check is implemented for spheres")
    target = float(k.value(t + s, r))
    omega = sphere_volume(n - 2)

    def total(panels: int) -> float:
        rho, wr = composite_rule(np.linspace(0.0, math.pi, panels + 1), 16)
        th, wt = composite_rule(np.linspace(0.0, math.pi, panels + 1), 16)
        R, T = np.meshgrid(rho, th, indexing="ij")
        cosd = np.cos(r) * np.cos(R) + np.sin(r) * np.sin(R) * np.cos(T)
        d = np.arccos(np.clip(cosd, -1.0, 1.0))
        vals = np.asarray(k.value(t, R)) * np.asarray(k.value(s, d))
        vals = vals * np.sin(R) ** (n - 1) * np.sin(T) ** (n - 2)
        return omega * float(wr @ vals @ wt)

    panels = 4
    prev = total(panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = total(panels)
        if abs(cur - prev) < tol / 4 * max(abs(cur), 1.0):
            return abs(target - cur) / abs(target)
        prev = cur
    raise AccuracyError("semigroup quadrature did not converge", abs(cur - prev))


# ------------------------------------------------------------------- suites

@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SuiteResult:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, value: float, threshold: float, detail: str = "") -> None:
        ok = bool(np.isfinite(value) and value <= threshold)
        self.checks.append(CheckResult(name, float(value), float(threshold), ok, detail))

    def add_bool(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name, 0.0 if ok else 1.0, 0.0, bool(ok), detail))


CONTROLS = ("dropped_exponential", "perturbed_prefactor", "wrong_sign")
SUITES = ("closed_form", "spectral", "abel", "trace", "volterra", "all")


def control_kernel(name: str | None, m: int = 1):
    """The odd-sphere kernel of S^(2m+1), optionally with a deliberate defect."""
    from .closed_form import SphereOddKernel

    if name is None:
        return SphereOddKernel(m)
    if name == "dropped_exponential":
        return SphereOddKernel(m, include_exponential=False)
    if name == "perturbed_prefactor":
        return SphereOddKernel(m, ladder_prefactor=(1 + 1e-2) / (2 * math.pi))
    if name == "wrong_sign":
        return SphereOddKernel(m, ladder_sign=-1)
    raise DomainError(f"unknown control {name!r}; choose from {', '.join(CONTROLS)}")


def _suite_closed_form(res: SuiteResult, tol: float, control: str | None) -> None:
    from .closed_form import (EuclidKernel, HyperbolicOddKernel, SphereOddKernel, euclid_recurrence_identity)
    from .spectral import sphere_kernel_spectral
    from .trace import diagonal_value

    k3 = control_kernel(control, 1)
    ts, rs = (0.1, 0.3, 1.0), (0.0, 0.5, math.pi / 2, math.pi - 0.3, math.pi)
    diff = max(abs(float(k3.value(t, r)) - sphere_kernel_spectral(3, t, r)) / sphere_kernel_spectral(3, t, r)
               for t in ts for r in rs)
    res.add("sphere3.closed_vs_spectral", diff, 1e-10)
    res.add("sphere3.pde_residual", pde_residual(k3, grid=((0.3, 1.0), (0.3, 1.5, 2.8))).max_rel, 1e-7)
    res.add("sphere3.normalization", abs(1 - normalization(k3, t=0.3)), 1e-9)
    res.add("sphere3.up_recurrence", up_recurrence_residual(SphereOddKernel(0), k3, grid=((0.3, 1.0), (0.5, 1.5, 2.5))).max_rel, 1e-8)
    positive = min(float(np.min(k3.value(t, np.linspace(0.05, math.pi - 0.05, 25)))) for t in (0.05, 0.5, 5.0)) > 0
    res.add_bool("sphere3.positivity", positive)

    k5 = SphereOddKernel(2)
    res.add("sphere5.pde_residual", pde_residual(k5, grid=((0.3, 1.0), (0.3, 1.5, 2.8))).max_rel, 1e-7)
    res.add("sphere5.normalization", abs(1 - normalization(k5, t=0.3)), 1e-9)

    h3 = HyperbolicOddKernel(1)
    res.add("hyperbolic3.pde_residual", pde_residual(h3, grid=((0.3, 1.0), (0.3, 1.0, 2.0))).max_rel, 1e-7)
    res.add("hyperbolic3.normalization", abs(1 - normalization(h3, t=0.5)), 1e-9)
    res.add("hyperbolic3.up_recurrence", up_recurrence_residual(HyperbolicOddKernel(0), h3, grid=((0.5, 1.0), (0.5, 2.0))).max_rel, 1e-10)
    diag = max(abs(float(HyperbolicOddKernel(m).value(t, 0.0)) / float(diagonal_value(m, "hyperbolic", t)) - 1)
               for m in range(1, 5) for t in (0.2, 1.0))
    res.add("hyperbolic.diagonal_closed_form", diag, 1e-11)

    res.add("euclid.recurrence_identity", max(euclid_recurrence_identity(n, 0.7, 1.0) for n in (1, 2, 3)), 1e-9)
    res.add("euclid2.pde_residual", pde_residual(EuclidKernel(2), grid=((0.3, 1.0), (0.3, 1.0, 2.0))).max_rel, 1e-9)
    res.add("euclid1.normalization", abs(1 - normalization(EuclidKernel(1), t=0.5)), 1e-12)


def _suite_spectral(res: SuiteResult, tol: float) -> None:
    from .spectral import SphereSpectralKernel

    k2, k4 = SphereSpectralKernel(2), SphereSpectralKernel(4)
    res.add("sphere2.normalization", abs(1 - normalization(k2, t=0.5)), 1e-10)
    res.add("sphere2.semigroup", max(semigroup_residual(k2, 2, 0.25, 0.25, r) for r in (0.0, 1.0, math.pi / 2)), 1e-6)
    res.add("sphere2.pde_residual", pde_residual(k2, grid=((0.3, 1.0), (0.3, 1.5, 2.8))).max_rel, 1e-7)
    res.add("sphere2_4.up_recurrence", up_recurrence_residual(k2, k4, grid=[(0.5, 1.0)]).max_rel, 1e-7)
    errs = delta_convergence(SphereSpectralKernel(3), f="cos", t_sequence=(0.2, 0.1, 0.05))
    res.add_bool("sphere3.delta_decreasing", all(b < a for a, b in zip(errs, errs[1:])))
    # against cos r the error is 1 - exp(-3t), so errs / t stays below 3
    res.add("sphere3.delta_rate", errs[-1] / 0.05, 3.0)


def _suite_abel(res: SuiteResult, tol: float) -> None:
    from .abel import HyperbolicDescentKernel, sphere_descend_main, sphere_duhamel_correction
    from .closed_form import HyperbolicOddKernel, SphereOddKernel
    from .spectral import sphere_kernel_spectral

    k2 = HyperbolicDescentKernel(2, HyperbolicOddKernel(1))
    res.add("hyperbolic2.pde_residual", pde_residual(k2, grid=((0.3, 1.0), (0.3, 1.0, 2.0))).max_rel, max(tol, 1e-6))
    res.add("hyperbolic2.normalization", max(abs(1 - normalization(k2, t=t, tol=1e-9)) for t in (0.3, 1.0)), 1e-7)
    k3 = SphereOddKernel(1)
    worst = 0.0
    for t in (0.5, 1.0):
        rs = np.array([0.0, math.pi / 2, math.pi])
        main = np.array([sphere_descend_main(2, t, r, k3) for r in rs])
        corr = np.asarray(sphere_duhamel_correction(2, t, rs, k3))
        ref = np.asarray(sphere_kernel_spectral(2, t, rs))
        worst = max(worst, float(np.max(np.abs(main + corr - ref) / ref)))
    res.add("sphere2.descent_identity", worst, 1e-5)


def _suite_trace(res: SuiteResult, tol: float) -> None:
    from itertools import combinations

    from .core import gamma_half, sphere_volume as vol
    from .spectral import sphere_trace
    from .trace import (c_mk, diag_poly, diag_recurrence_identity, diagonal_value, heat_trace_coeffs,
                        q_recurrence, weyl_leading_coeff)

    res.add_bool("trace.corollary_hyperbolic", all(diag_recurrence_identity(m, "hyperbolic") for m in range(1, 7)))
    res.add_bool("trace.corollary_sphere_r0", all(diag_recurrence_identity(m, "sphere_r0") for m in range(1, 7)))
    res.add_bool("trace.corollary_sphere_rpi", all(diag_recurrence_identity(m, "sphere_rpi") for m in range(1, 7)))
    ok = all(q_recurrence(m, kind) / gamma_half(m).rational == diag_poly(m, kind)
             for m in range(1, 11) for kind in ("hyperbolic", "sphere"))
    res.add_bool("trace.q_recurrence", ok)

    def brute(m, k):
        return sum(math.prod(i * i for i in sub) for sub in combinations(range(1, m), k))

    res.add_bool("trace.c_mk_bruteforce", all(c_mk(m, k) == brute(m, k) for m in range(1, 8) for k in range(0, m + 2)))
    worst = 0.0
    for m in (1, 2):
        for t in (0.05, 0.1):
            tr = sphere_trace(2 * m + 1, t)
            worst = max(worst, abs(tr - vol(2 * m + 1) * float(diagonal_value(m, "sphere", t))) / tr)
    res.add("trace.heat_trace_asymptotics", worst, 1e-10)
    res.add_bool("trace.weyl_leading", all(heat_trace_coeffs(m, 0)[0] == weyl_leading_coeff(m) for m in (1, 2, 3)))


def _suite_volterra(res: SuiteResult, tol: float) -> None:
    from .abel import TimeGrid, sphere_volterra_solve

    table = sphere_volterra_solve(TimeGrid(1.0, 32, "graded"), 32, check=False)
    res.add("volterra.row_max_error", table.errors["row_max"], 5e-4)


def run_suite(name: str = "all", tol: float = 1e-6, control: str | None = None) -> SuiteResult:
    """Run a named verification suite.

    ``control`` swaps the 3-sphere kernel for a deliberately broken variant
    (see :data:`CONTROLS`); the suite must then fail.
    """
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if control is not None:
        control_kernel(control)
    res = SuiteResult()
    parts: Iterable[str] = ("closed_form", "spectral", "abel", "trace") if name == "all" else (name,)
    if control is not None and "closed_form" not in parts:
        parts = ("closed_form", *parts)
    for part in parts:
        if part == "closed_form":
            _suite_closed_form(res, tol, control)
        elif part == "spectral":
            _suite_spectral(res, tol)
        elif part == "abel":
            _suite_abel(res, tol)
        elif part == "trace":
            _suite_trace(res, tol)
        elif part == "volterra":
            _suite_volterra(res, tol)
    return res
