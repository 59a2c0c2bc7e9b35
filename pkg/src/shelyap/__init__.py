"""Positive-integer moment Lyapunov exponents of the stochastic heat equation
under hyperbolic scaling, computed by three provably equal routes and
cross-checked numerically.
"""

from .clusters import (
    Cluster,
    ClusterResult,
    FirstMerge,
    MergeEvent,
    PiecewiseLinearPath,
    block_com_speed,
    event_tolerance,
    first_optimal_merge,
    initial_speeds,
    separation_margins,
    simulate_inertia,
)
from .closedform import (
    GammaReport,
    RecursionCheck,
    gamma3,
    gamma_report,
    one_point_gamma,
    two_point_gamma,
    verify_recursion_identity,
)
from .errors import (
    DimensionTooLarge,
    HypothesisNotMet,
    InvalidContour,
    LengthMismatch,
    NoMerge,
    NonPositiveMoment,
    NonPositiveMultiplicity,
    NonPositiveTime,
    NuTooLarge,
    OutOfRange,
    ShelyapError,
    UnsortedLocations,
)
from .instance import (
    FlatInstance,
    MomentInstance,
    flatten,
    gamma1_objective,
    gamma2_objective,
    validate_instance,
)
from .quadrature import (
    ContourConfig,
    contour_moment,
    contour_moment_complex,
    default_contour_config,
    heat_kernel,
    lyapunov_rate_estimate,
    upper_bound_value,
)
from .sampling import random_instance, sample_matching
from .solvers import (
    GapRecord,
    IsotonicProblem,
    StructureReport,
    VariationalSolution,
    bruteforce_chain_qp,
    build_b_from_clusters,
    check_minimizer_structure,
    gamma1_isotonic,
    gamma2_isotonic,
    isotonic_nonincreasing,
    lift_b_to_a,
    oracle_gamma1,
    oracle_gamma2,
    solve_gamma1,
    solve_gamma2,
)

__version__ = "0.1.0"
