"""vacuumflow: a desk-scale verification lab for the continuity and pure
transport equations with prescribed Sobolev velocity fields.

The package solves both equations numerically, builds exact reference
solutions from characteristics, and scores structural properties of the
solutions: weak-form residuals for all notion variants, decay of the
regularization commutator, continuity of the vacuum measure in time,
inclusion of vacuum regions between companion solutions, and conservation of
the vacuum-density product integral.
"""

from .exponents import (
    ANY_FINITE,
    INF,
    Exponent,
    ExponentTuple,
    Verdict,
    check_diperna_lions,
    check_gamma_condition,
    check_product_theorem,
    classify_renorm_growth,
    holder_conjugate,
    sobolev_star,
)
from .fields import (
    Domain,
    Grid,
    ScalarField,
    Trajectory,
    bochner_norm,
    dist_boundary,
    integrate,
    interpolate,
    lp_norm,
    make_field,
)
from .velocity import VelocityField, make_velocity, sobolev_norm_estimate, trace_check
from .characteristics import (
    FlowMap,
    compute_flow,
    exact_continuity,
    exact_transport,
    exact_vacuum_measure,
    oracle_trajectory,
)
from .solver import SolverConfig, SolverError, cfl_dt, solve, step_continuity, step_transport
from .mollify import MollifierKernel, decay_study, friedrichs_commutator, make_kernel, mollify
from .weak_forms import (
    BoundaryCutoff,
    RenormFunction,
    TestFunction,
    TimeProfile,
    boundary_term_decay,
    hardy_quotient,
    make_renorm,
    make_test_function,
    make_time_profile,
    residual,
)
from .vacuum import (
    VacuumReport,
    bdelta_limit_error,
    conserved_product_deviation,
    inclusion_defect,
    product_residual,
    vacuum_indicator,
    vacuum_measure_series,
)

__version__ = "0.1.0"
