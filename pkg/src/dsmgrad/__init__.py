"""Gradient-type dynamical systems method for monotone ill-posed equations.

Solves ``F(u) = f`` for monotone ``F`` from noisy data ``f_delta`` with the
gradient iteration/flow regularized by a decreasing ``a(t)`` and stopped by
the discrepancy principle.  A Newton-type baseline and numerical checks of
the supporting inequalities are included.
"""

from .errors import (
    BracketError,
    DimensionError,
    DivergenceError,
    DSMError,
    InternalConsistencyError,
    NoCrossingError,
    ParameterError,
    PreconditionError,
    SolverFailure,
)
from .hilbert import Grid, GridFunction, inner_product, norm
from .operator import MonotoneProblem, OperatorBounds, residual, wiener_problem
from .regularized import (
    RegularizedSolution,
    find_discrepancy_crossing,
    perturbation_bound_check,
    phi_psi_curve,
    solve_regularized,
)
from .schedule import (
    PowerSchedule,
    ScheduleParams,
    StepSizePolicy,
    heuristic_a0,
    kappa_scale,
    remark_construction,
    step_band_upper,
    validate_continuous,
    validate_discrete,
    verify_integral_lemmas,
)
from .solver import (
    SolveReport,
    StopRule,
    check_initial_condition,
    dsmg_flow,
    dsmg_iterate,
    dsmn_iterate,
    gap_diagnostic,
)

__version__ = "0.1.0"
