from fwal.solvers.ascg import ActiveSet, solve_ascg
from fwal.solvers.cg import solve_cg, solve_projection_method
from fwal.solvers.mwal import hedge_learning_rate, solve_mwal
from fwal.solvers.objective import Objective, al_margin, line_search_quadratic
from fwal.solvers.sfw import SfwSchedule, solve_sfw
from fwal.solvers.trace import CSV_HEADER, RepresentationError, SolverTrace, TraceRow

SOLVERS = {
    "cg": solve_cg,
    "ascg": solve_ascg,
    "sfw": solve_sfw,
    "mwal": solve_mwal,
}

__all__ = [
    "ActiveSet",
    "CSV_HEADER",
    "Objective",
    "RepresentationError",
    "SOLVERS",
    "SfwSchedule",
    "SolverTrace",
    "TraceRow",
    "al_margin",
    "hedge_learning_rate",
    "line_search_quadratic",
    "solve_ascg",
    "solve_cg",
    "solve_mwal",
    "solve_projection_method",
    "solve_sfw",
]
