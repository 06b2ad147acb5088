"""Assignment solving with perturbation robustness guarantees.

Solve linear assignment problems exactly, compute how far each edge weight
can drift before the optimum changes, certify measured optima under bounded
measurement error, and simulate churn-free multi-vehicle guidance.
"""
from .core import (
    COST_TOL,
    Assignment,
    BipartiteInstance,
    BruteForceResult,
    Edge,
    SolveReport,
    assignment_cost,
    brute_force_solve,
    constrained_solve,
    solve_lap,
    uniqueness_check,
)
from .errors import (
    CapExceededError,
    DegenerateOptimumError,
    InfeasibleError,
    LapsensError,
    ParseError,
    ShapeError,
    ShapeMismatchError,
    UnknownEdgeError,
)
from .io import (
    AnalysisReport,
    analyze,
    format_matrix,
    format_perturbation,
    format_scenario,
    parse_error_bounds,
    parse_matrix,
    parse_perturbation,
    parse_scenario,
    report_from_json,
    report_to_json,
    simlog_records,
)
from .perturb import (
    DEFAULT_MAX_ITERS,
    DEFAULT_SATURATION_CAP,
    CriticalSearchReport,
    ErrorBounds,
    IntervalTable,
    Perturbation,
    SensitivityMatrix,
    TraceStep,
    certify_optimal,
    critical_search,
    divided_bound,
    elementwise_sensitivities,
    halfspace_intervals,
    is_critical,
    verify_allowable,
)
from .sim import (
    RunMetrics,
    Scenario,
    SimLog,
    SimStep,
    exact_distances,
    measure_weights,
    run_simulation,
    step_dynamics,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "AnalysisReport",
    "BipartiteInstance",
    "BruteForceResult",
    "COST_TOL",
    "CapExceededError",
    "CriticalSearchReport",
    "DEFAULT_MAX_ITERS",
    "DEFAULT_SATURATION_CAP",
    "DegenerateOptimumError",
    "Edge",
    "ErrorBounds",
    "InfeasibleError",
    "IntervalTable",
    "LapsensError",
    "ParseError",
    "Perturbation",
    "RunMetrics",
    "Scenario",
    "SensitivityMatrix",
    "ShapeError",
    "ShapeMismatchError",
    "SimLog",
    "SimStep",
    "SolveReport",
    "TraceStep",
    "UnknownEdgeError",
    "analyze",
    "assignment_cost",
    "brute_force_solve",
    "certify_optimal",
    "constrained_solve",
    "critical_search",
    "divided_bound",
    "elementwise_sensitivities",
    "exact_distances",
    "format_matrix",
    "format_perturbation",
    "format_scenario",
    "halfspace_intervals",
    "is_critical",
    "measure_weights",
    "parse_error_bounds",
    "parse_matrix",
    "parse_perturbation",
    "parse_scenario",
    "report_from_json",
    "report_to_json",
    "run_simulation",
    "simlog_records",
    "solve_lap",
    "step_dynamics",
    "summarize",
    "uniqueness_check",
    "verify_allowable",
]
