"""Monotone iterative enclosures for impulsive Hilfer-type fractional systems.

Modules
-------
specialfn
    Mittag-Leffler functions, the Wright-type density xi_mu and its quadrature.
fracquad
    Graded meshes, product integration of weakly singular kernels, and
    discrete Riemann-Liouville / Hilfer operators.
operators
    The solution-operator families P*(t), S*(t) built from -A, with two
    independent backends and bound checks.
gronwall
    The fractional Gronwall bound and an inequality checker.
monotone
    The mild-solution operator G, lower/upper solutions, the monotone
    iteration and the uniqueness certificate.
config, expr, cli
    Problem specifications, the expression language and the command line.
"""

from .exceptions import (
    BackendDisagreementError,
    IllConditionedWarning,
    IterationConvergenceError,
    OrderingWarning,
    QuadratureAccuracyWarning,
    QuadratureError,
    SeriesConvergenceError,
)
from .fracquad import IntervalMesh, SampledFunction, hilfer_derivative, rl_integral, singular_convolution
from .gronwall import GronwallData, ml_kernel_bound, verify_inequality
from .monotone import (
    Discretization,
    Impulse,
    ImpulsiveProblem,
    WeightedTrajectory,
    apply_G,
    check_conditions,
    fixed_point,
    iterate_extremal,
    uniqueness_certificate,
    verify_lower_upper,
)
from .operators import Backend, Generator, OperatorFamily, operator_bound_check, p_operator, s_operator
from .specialfn import FractionalOrder, SeriesControl, mittag_leffler, ml_array, xi_density

__version__ = "0.1.0"
