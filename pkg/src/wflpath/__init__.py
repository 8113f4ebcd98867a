"""Exact solution paths for the weighted 1-D fused lasso.

Computes every critical value of the regularization parameter at which
the solution changes linear segment, the full piecewise-linear path, and
the fuse/unfuse event log, with interchangeable double-precision and
exact-rational arithmetic.  Independent fixed-gamma solvers validate the
path, and instance generators reproduce the quadratic worst-case and
random-ensemble scaling experiments.
"""

from .backends import F64, RATIONAL, Backend, get_backend
from .core import (BoundaryState, DualInstance, EventKind, Instance,
                   InvalidInstanceError, PathEvent, SolutionPath)
from .generators import (WorstCaseParams, check_worst_case_conditions,
                         gen_1fl, gen_random, gen_worst_case,
                         verify_alternating_epochs, worst_case_params)
from .oracle import (OracleError, fused_interval_scan, solve_fixed_gamma_dp,
                     solve_fixed_gamma_qp, subgradient_violation,
                     sweep_segment_count)
from .path import (Candidate, PathNumericalError, VerifyReport,
                   free_point_line, pin_candidate, release_candidate,
                   solve_path, verify_path)
from .transform import (from_dual, gamma_for_budget, to_dual, tv_budget_of,
                        weighted_tv)

__version__ = "0.1.0"

__all__ = [
    "Backend", "F64", "RATIONAL", "get_backend",
    "Instance", "DualInstance", "BoundaryState", "PathEvent", "EventKind",
    "SolutionPath", "InvalidInstanceError",
    "to_dual", "from_dual", "weighted_tv", "tv_budget_of", "gamma_for_budget",
    "solve_path", "verify_path", "VerifyReport", "Candidate",
    "PathNumericalError", "free_point_line", "pin_candidate",
    "release_candidate",
    "OracleError", "solve_fixed_gamma_dp", "solve_fixed_gamma_qp",
    "sweep_segment_count", "fused_interval_scan", "subgradient_violation",
    "WorstCaseParams", "worst_case_params", "gen_worst_case", "gen_random",
    "gen_1fl", "check_worst_case_conditions", "verify_alternating_epochs",
]
