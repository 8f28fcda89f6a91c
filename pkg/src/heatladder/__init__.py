"""Heat kernels on space forms through dimension-ladder and Abel recurrences."""

from .abel import (
    HyperbolicDescentKernel,
    QuadratureSpec,
    SphereDescentKernel,
    SphereMainTermKernel,
    TimeGrid,
    VolterraTable,
    hyper_descend,
    sphere_descend_main,
    sphere_descent_identity,
    sphere_duhamel_correction,
    sphere_relation_at_pi,
    sphere_relation_at_zero,
    sphere_volterra_solve,
)
from .closed_form import (
    EuclidKernel,
    HyperbolicOddKernel,
    SphereOddKernel,
    ThetaTruncation,
    circle_kernel_jet,
    euclid_kernel,
    euclid_recurrence_identity,
    hyperbolic_odd_kernel,
    sphere_odd_kernel,
)
from .core import EvalPoint, FunctionKernel, KernelEvaluator, Kind, SpaceForm, sphere_volume
from .errors import AccuracyError, DomainError, HeatKernelError, SingularityError, TruncationError
from .exact import ExactScalar, RationalPoly
from .jets import Jet, jet_arith, jet_elementary, ladder_apply
from .spectral import SpectralTruncation, SphereSpectralKernel, sphere_kernel_spectral, sphere_trace, zonal_ratio
from .trace import (
    DiagonalForm,
    c_mk,
    diag_recurrence_identity,
    heat_trace_coeffs,
    hyper_diag_poly,
    q_recurrence,
    sphere_diag_poly,
    weyl_leading_coeff,
)
from .verify import (
    ResidualReport,
    delta_convergence,
    normalization,
    pde_residual,
    run_suite,
    semigroup_residual,
    up_recurrence_residual,
)

__version__ = "0.1.0"
