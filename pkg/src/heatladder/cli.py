"""Command-line front end: kernel tables, exact coefficient tables, verification
suites and the Volterra solver, with CSV or JSON output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .core import Kind, KernelEvaluator, SpaceForm
from .errors import AccuracyError, DomainError, HeatKernelError, SingularityError, TruncationError

EXIT_OK, EXIT_VALIDATION, EXIT_ACCURACY, EXIT_VERIFY = 0, 2, 3, 4
TOL_RANGE = (1e-14, 1e-2)


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int = 1
    spacing: Literal["linear", "log"] = "linear"
    items: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.count < 1:
            raise DomainError("grid count must be >= 1")
        if self.spacing not in ("linear", "log"):
            raise DomainError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "log" and not (self.start > 0 and self.stop > 0):
            raise DomainError("log spacing needs positive endpoints")

    @classmethod
    def single(cls, value: float) -> GridSpec:
        return cls(value, value, 1)

    @classmethod
    def explicit(cls, values: Sequence[float]) -> GridSpec:
        values = tuple(float(v) for v in values)
        return cls(values[0], values[-1], len(values), items=values)

    def values(self) -> np.ndarray:
        if self.items is not None:
            return np.array(self.items, dtype=float)
        if self.count == 1:
            return np.array([self.start], dtype=float)
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class RunConfig:
    command: Literal["eval", "coeffs", "verify", "volterra"]
    space: SpaceForm | None = None
    t: GridSpec | None = None
    r: GridSpec | None = None
    tol: float = 1e-10
    format: Literal["csv", "json"] = "csv"
    out: str | None = None
    # coeffs
    table: Literal["diag", "cmk", "trace", "q"] = "diag"
    diag_kind: str = "hyperbolic"
    m: int = 1
    K: int = 4
    # verify
    suite: str = "all"
    control: str | None = None
    # volterra
    t_end: float = 1.0
    steps: int = 32
    r_nodes: int = 32
    time_spacing: str = "graded"
    interpolation: str = "linear"

    def validate(self) -> RunConfig:
        lo, hi = TOL_RANGE
        if not lo <= self.tol <= hi:
            raise DomainError(f"tol must lie in [{lo:g}, {hi:g}]")
        if self.format not in ("csv", "json"):
            raise DomainError(f"unknown format {self.format!r}")
        if self.command == "eval" and (self.space is None or self.t is None or self.r is None):
            raise DomainError("eval needs a space, times and distances")
        if self.m < 1 or self.K < 0:
            raise DomainError("need m >= 1 and K >= 0")
        return self


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def select_kernel(space: SpaceForm, t: float) -> KernelEvaluator:
    """Route (geometry, n) to a closed form, the spectral series or Abel descent."""
    from .abel import SMALL_T_FLOOR, HyperbolicDescentKernel, SphereMainTermKernel
    from .closed_form import EuclidKernel, HyperbolicOddKernel, SphereOddKernel
    from .spectral import MIN_T, SphereSpectralKernel

    n = space.dim
    if space.kind is Kind.EUCLIDEAN:
        return EuclidKernel(n)
    if space.kind is Kind.HYPERBOLIC:
        if n % 2:
            return HyperbolicOddKernel((n - 1) // 2)
        return HyperbolicDescentKernel(n, HyperbolicOddKernel(n // 2))
    if n % 2:
        return SphereOddKernel((n - 1) // 2, min_t=min(t, 1e-4))
    if t >= MIN_T:
        return SphereSpectralKernel(n)
    # below the spectral floor the Duhamel correction is smaller than exp(-pi^2 / (4t))
    return SphereMainTermKernel(n, SphereOddKernel(n // 2, min_t=SMALL_T_FLOOR))


def _write_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, str):
        return v
    return float(fmt(v))


def _write_table(cfg: RunConfig, header: Sequence[str], rows: Sequence[Sequence], extra: dict | None = None) -> str:
    if cfg.format == "csv":
        return _write_csv(header, rows)
    doc = {"command": cfg.command, "rows": [{h: _json_value(v) for h, v in zip(header, row)} for row in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1) + "\n"


def _eval(cfg: RunConfig) -> tuple[str, int]:
    ts, rs = cfg.t.values(), cfg.r.values()
    for t in ts:
        if not t > 0:
            raise DomainError("times must be positive")
    cfg.space.check_r(rs)
    rows = []
    for t in ts:
        kernel = select_kernel(cfg.space, float(t))
        vals = np.atleast_1d(kernel.value(float(t), rs))
        rows.extend((float(t), float(r), float(v), kernel.method) for r, v in zip(rs, vals))
    return _write_table(cfg, ("t", "r", "value", "method"), rows), EXIT_OK


def _rational_row(m: int, k: int, value: Fraction, sqrtpi: int) -> tuple:
    value = Fraction(value)
    return (m, k, value.numerator, value.denominator, sqrtpi)


def _coeffs(cfg: RunConfig) -> tuple[str, int]:
    from .trace import c_mk, diag_poly, heat_trace_coeffs, q_recurrence

    m = cfg.m
    if cfg.table == "diag":
        poly = diag_poly(m, cfg.diag_kind)
        rows = [_rational_row(m, k, poly[k], 0) for k in range(poly.degree + 1)]
    elif cfg.table == "q":
        poly = q_recurrence(m, cfg.diag_kind)
        rows = [_rational_row(m, k, poly[k], 1) for k in range(poly.degree + 1)]
    elif cfg.table == "cmk":
        rows = [_rational_row(m, k, Fraction(c_mk(m, k)), 0) for k in range(m)]
    elif cfg.table == "trace":
        rows = [_rational_row(m, k, a.rational, a.sqrtpi_power) for k, a in enumerate(heat_trace_coeffs(m, cfg.K))]
    else:
        raise DomainError(f"unknown coefficient table {cfg.table!r}")
    return _write_table(cfg, ("m", "k", "numerator", "denominator", "sqrtpi"), rows), EXIT_OK


def _verify(cfg: RunConfig) -> tuple[str, int]:
    from .verify import run_suite

    result = run_suite(cfg.suite, cfg.tol, cfg.control)
    rows = [(c.name, c.value, c.threshold, "pass" if c.passed else "fail") for c in result.checks]
    text = _write_table(cfg, ("check", "value", "threshold", "status"), rows,
                        {"passed": result.passed, "suite": cfg.suite, "control": cfg.control})
    return text, EXIT_OK if result.passed else EXIT_VERIFY


def _volterra(cfg: RunConfig) -> tuple[str, int]:
    from .abel import TimeGrid, sphere_volterra_solve

    table = sphere_volterra_solve(TimeGrid(cfg.t_end, cfg.steps, cfg.time_spacing), cfg.r_nodes,
                                  tol=cfg.tol,
                                  interpolation=cfg.interpolation)
    rows = [(t, r, v, "volterra") for t, r, v in table.rows()]
    return _write_table(cfg, ("t", "r", "value", "method"), rows, {"errors": table.errors}), EXIT_OK


COMMANDS = {"eval": _eval, "coeffs": _coeffs, "verify": _verify, "volterra": _volterra}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a validated configuration and return the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        config.validate()
        text, status = COMMANDS[config.command](config)
    except (AccuracyError, TruncationError, SingularityError) as exc:
        print(f"accuracy error: {exc}", file=stderr)
        return EXIT_ACCURACY
    except (DomainError, ValueError, KeyError) as exc:
        print(f"validation error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except HeatKernelError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_ACCURACY
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return status


# ------------------------------------------------------------------- parsing

def _add_grid(p: argparse.ArgumentParser, name: str) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument(f"--{name}", type=float, nargs="+", help=f"explicit {name} values")
    g.add_argument(f"--{name}-grid", type=float, nargs=3, metavar=("START", "STOP", "COUNT"),
                   help=f"{name} grid from START to STOP with COUNT points")
    p.add_argument(f"--{name}-spacing", choices=("linear", "log"), default="linear")


def _common(p: argparse.ArgumentParser, tol: float) -> None:
    p.add_argument("--tol", type=float, default=tol, help="tolerance in [1e-14, 1e-2]")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write output here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatladder", description="Heat kernels on space forms.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="tabulate a heat kernel")
    p.add_argument("--space", required=True, choices=("euclid", "sphere", "hyperbolic"))
    p.add_argument("--dim", type=int, required=True, help="manifold dimension n")
    _add_grid(p, "t")
    _add_grid(p, "r")
    _common(p, 1e-10)

    p = sub.add_parser("coeffs", help="exact coefficient tables")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--diag", choices=("hyperbolic", "sphere"), help="diagonal polynomial P_m or p_m")
    g.add_argument("--q", choices=("hyperbolic", "sphere"), dest="qkind",
                   help="recurrence polynomial Q_m or q_m (coefficients times sqrt(pi))")
    g.add_argument("--cmk", action="store_true", help="elementary symmetric numbers c_{m,k}")
    g.add_argument("--trace", action="store_true", help="heat-trace coefficients of S^(2m+1)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--K", type=int, default=4, help="last trace coefficient index")
    _common(p, 1e-10)

    p = sub.add_parser("verify", help="run identity checks against oracles")
    p.add_argument("--suite", default="all", choices=("closed_form", "spectral", "abel", "trace", "volterra", "all"))
    p.add_argument("--control", choices=("dropped_exponential", "perturbed_prefactor", "wrong_sign"),
                   help="swap in a deliberately broken 3-sphere kernel")
    _common(p, 1e-6)

    p = sub.add_parser("volterra", help="solve for the S^2 kernel on a time grid")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=32)
    p.add_argument("--r-nodes", type=int, default=32)
    p.add_argument("--spacing", choices=("graded", "uniform"), default="graded")
    p.add_argument("--interpolation", choices=("linear", "cubic"), default="linear")
    _common(p, 5e-4)
    return parser


def _grid(ns: argparse.Namespace, name: str) -> GridSpec:
    explicit = getattr(ns, name)
    spacing = getattr(ns, f"{name}_spacing")
    if explicit is not None:
        return GridSpec.explicit(explicit)
    start, stop, count = getattr(ns, f"{name}_grid")
    if count != int(count):
        raise DomainError("grid count must be an integer")
    return GridSpec(start, stop, int(count), spacing)


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, tol=ns.tol, format=ns.format, out=ns.out)
    if ns.command == "eval":
        cfg.space = SpaceForm(Kind.parse(ns.space), ns.dim)
        cfg.t, cfg.r = _grid(ns, "t"), _grid(ns, "r")
    elif ns.command == "coeffs":
        cfg.m, cfg.K = ns.m, ns.K
        if ns.diag:
            cfg.table, cfg.diag_kind = "diag", ns.diag
        elif ns.qkind:
            cfg.table, cfg.diag_kind = "q", ns.qkind
        else:
            cfg.table = "cmk" if ns.cmk else "trace"
    elif ns.command == "verify":
        cfg.suite, cfg.control = ns.suite, ns.control
    else:
        cfg.t_end, cfg.steps, cfg.r_nodes = ns.t_end, ns.steps, ns.r_nodes
        cfg.time_spacing, cfg.interpolation = ns.spacing, ns.interpolation
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
    except DomainError as exc:
        parser.print_usage(sys.stderr)
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(cfg)


def entry_point() -> None:
    sys.exit(main())
