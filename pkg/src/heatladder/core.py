"""Geometric types, sphere volumes, half-integer Gamma values and the common
kernel-evaluator interface."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Callable

import numpy as np

from .errors import DomainError
from .exact import ExactScalar

if TYPE_CHECKING:
    from .jets import Jet


class Kind(enum.Enum):
    EUCLIDEAN = "euclid"
    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"

    @property
    def curvature(self) -> int:
        return {Kind.EUCLIDEAN: 0, Kind.SPHERE: 1, Kind.HYPERBOLIC: -1}[self]

    @classmethod
    def parse(cls, name: str | Kind) -> Kind:
        if isinstance(name, Kind):
            return name
        aliases = {"euclid": cls.EUCLIDEAN, "euclidean": cls.EUCLIDEAN, "r": cls.EUCLIDEAN,
                   "sphere": cls.SPHERE, "s": cls.SPHERE,
                   "hyperbolic": cls.HYPERBOLIC, "h": cls.HYPERBOLIC}
        try:
            return aliases[name.lower()]
        except KeyError:
            raise DomainError(f"unknown space kind {name!r}") from None


@dataclass(frozen=True)
class SpaceForm:
    """Simply connected space of constant curvature +1, 0 or -1 and dimension ``dim``."""

    kind: Kind
    dim: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be an integer >= 1, got {self.dim}")

    @property
    def r_max(self) -> float:
        return math.pi if self.kind is Kind.SPHERE else math.inf

    def check_r(self, r) -> None:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max) or not np.all(np.isfinite(r)):
            raise DomainError(f"distance outside [0, {self.r_max}] for {self.kind.value}")

    def require_dim_at_least(self, n: int) -> None:
        if self.dim < n:
            raise DomainError(f"operation requires dimension >= {n}, got {self.dim}")

    def warp(self, r):
        """The radial warping function: sin r, r or sinh r."""
        if self.kind is Kind.SPHERE:
            return np.sin(r)
        if self.kind is Kind.HYPERBOLIC:
            return np.sinh(r)
        return np.asarray(r, dtype=float)

    def radial_drift(self, r):
        """Coefficient c(r) in the radial Laplacian h_rr + (n-1) c(r) h_r."""
        r = np.asarray(r, dtype=float)
        if self.kind is Kind.SPHERE:
            c = 1.0 / np.tan(r)
        elif self.kind is Kind.HYPERBOLIC:
            c = 1.0 / np.tanh(r)
        else:
            c = 1.0 / r
        return (self.dim - 1) * c

    def measure(self, r):
        """Radial volume density Vol(S^{n-1}) * warp(r)^{n-1}."""
        return sphere_volume(self.dim - 1) * self.warp(r) ** (self.dim - 1)

    @property
    def ladder_rate(self) -> int:
        """Exponent rate in the two-step ladder prefactor exp(rate * n * t)."""
        return self.kind.curvature


@dataclass(frozen=True)
class EvalPoint:
    t: float
    r: float

    def validate(self, space: SpaceForm) -> EvalPoint:
        if not self.t > 0:
            raise DomainError(f"time must be positive, got {self.t}")
        space.check_r(self.r)
        return self


def sphere_volume(d: int) -> float:
    """Volume of the unit sphere S^d embedded in R^{d+1}."""
    if d < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {d}")
    half = (d + 1) / 2
    return 2.0 * math.exp(half * math.log(math.pi) - math.lgamma(half))


def gamma_half(j: int) -> ExactScalar:
    """Gamma(j + 1/2) = (2j)! / (4^j j!) * sqrt(pi), exactly."""
    if j < 0:
        raise DomainError(f"gamma_half needs j >= 0, got {j}")
    return ExactScalar(Fraction(math.factorial(2 * j), 4**j * math.factorial(j)), 1)


def sphere_volume_exact(d: int) -> tuple[Fraction, Fraction]:
    """Vol(S^d) as ``(q, p)`` meaning ``q * pi**p`` with rational ``q`` and ``p``."""
    if d < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {d}")
    if d % 2 == 1:
        m = (d - 1) // 2
        return Fraction(2, math.factorial(m)), Fraction(m + 1)
    # Gamma(m + 1/2) carries sqrt(pi); it cancels one half-power of pi
    m = d // 2
    g = gamma_half(m)
    return Fraction(2) / g.q, Fraction(2 * m + 1, 2) - Fraction(1, 2)


class KernelEvaluator:
    """Radial heat kernel ``(t, r) -> value`` on a space form.

    Subclasses implement :meth:`value`; those that can produce Taylor jets in
    ``r`` set ``has_jet`` and implement :meth:`radial_jet`.  ``value`` must
    accept numpy arrays and broadcast ``t`` against ``r``.
    """

    has_jet: bool = False
    has_time_derivative: bool = False
    method: str = "generic"

    def __init__(self, space: SpaceForm):
        self.space = space

    @property
    def dim(self) -> int:
        return self.space.dim

    def value(self, t, r):
        raise NotImplementedError

    def __call__(self, t, r):
        return self.value(t, r)

    def radial_jet(self, t: float, r0: float, order: int) -> Jet:
        raise NotImplementedError(f"{type(self).__name__} provides no radial jets")

    def time_derivative(self, t, r):
        raise NotImplementedError(f"{type(self).__name__} provides no time derivative")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.space.kind.value}, n={self.dim})"


class FunctionKernel(KernelEvaluator):
    """Wrap a plain vectorised function ``f(t, r)`` as an evaluator."""

    def __init__(self, space: SpaceForm, func: Callable, method: str = "function"):
        super().__init__(space)
        self._func = func
        self.method = method

    def value(self, t, r):
        return self._func(t, r)


def as_output(x):
    """Return a Python float for 0-d results, the array otherwise."""
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x
