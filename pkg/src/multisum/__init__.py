"""Borel summation and multisummation of formal solutions of nonlinear Cauchy problems."""

from .errors import (
    AuditFailure,
    DegeneracyError,
    DirectionRejected,
    DomainError,
    MultisumError,
    NumericFailure,
    ParameterError,
    TruncationError,
    ValidationError,
)
from .series_core import (
    GevreyFit,
    TSeries,
    XiSeries,
    XPoly,
    accelerate_formal,
    euler_apply,
    euler_inverse,
    formal_borel,
    formal_laplace,
    gevrey_fit,
    ts_mul,
)
from .convolution import GrowthBound, conv, conv_numeric, conv_power
from .borel_laplace import (
    ContourSpec,
    RationalApprox,
    SectorSpec,
    accelerate_numeric,
    borel_contour_eval,
    laplace_eval,
    pade_continue,
)
from .cauchy_solver import (
    CauchyProblem,
    EpsGraded,
    MultiLevel,
    NormalizedProblem,
    SolverSettings,
    TermIndex,
    assemble_G,
    borel_tshift,
    convolution_fixpoint,
    formal_solve,
    normalize,
    resum,
    residual_check,
)

__version__ = "0.1.0"
