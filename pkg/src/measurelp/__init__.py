"""Primal/dual bounds for linear programs over measures.

Moment problems over half-open box partitions are discretised two ways: an
atomic-measure grid LP (lower bounds for sup problems) and an exchange-method
restricted dual (upper bounds), with weak duality certified on every run.
A second family poses density problems in L^p with kernel constraints and
solves matched collocation LP pairs.
"""

from .density import (
    CollocationReport,
    DensitySlaterReport,
    KernelNorms,
    LpDensityProblem,
    OperatorBoundReport,
    check_lp_slater,
    collocation_report,
    discretize_lp_density,
    kernel_norms,
    kernel_rho,
    kernel_tau,
    operator_bound_check,
)
from .expressions import (
    DomainError,
    Expression,
    ExpressionError,
    ParseError,
    evaluate,
    evaluate_many,
    format_expression,
    free_variables,
    parse_expression,
)
from .fileio import (
    FORMAT_VERSION,
    LoadedProblem,
    ProblemFormatError,
    canonical_json,
    density_report_document,
    load_problem,
    load_report,
    moment_report_document,
    problem_document,
    problem_from_document,
    write_problem,
    write_report,
)
from .geometry import Box, Partition, PartitionReport, UnitTransform, grid_points, validate_partition
from .moment import (
    AtomicMeasure,
    DualityReport,
    DualPoint,
    ExchangeResult,
    MomentProblem,
    PiecewiseFunction,
    ReportStatus,
    SolverConfig,
    apply_unit_normalization,
    check_dual_slater,
    check_primal_slater,
    duality_report,
    exchange_solve,
    solve_grid_primal,
)
from .options import OptionBound, build_option_bound_problem, solve_option_bound
from .simplex import FiniteLP, LPOutcome, LPStatus, NumericalFailure, solve_lp, standardize

__all__ = [
    "AtomicMeasure",
    "Box",
    "CollocationReport",
    "DensitySlaterReport",
    "DomainError",
    "DualPoint",
    "DualityReport",
    "ExchangeResult",
    "Expression",
    "ExpressionError",
    "FORMAT_VERSION",
    "FiniteLP",
    "KernelNorms",
    "LPOutcome",
    "LPStatus",
    "LoadedProblem",
    "LpDensityProblem",
    "MomentProblem",
    "NumericalFailure",
    "OperatorBoundReport",
    "OptionBound",
    "ParseError",
    "Partition",
    "PartitionReport",
    "PiecewiseFunction",
    "ProblemFormatError",
    "ReportStatus",
    "SolverConfig",
    "UnitTransform",
    "apply_unit_normalization",
    "build_option_bound_problem",
    "canonical_json",
    "check_dual_slater",
    "check_lp_slater",
    "check_primal_slater",
    "collocation_report",
    "density_report_document",
    "discretize_lp_density",
    "duality_report",
    "evaluate",
    "evaluate_many",
    "exchange_solve",
    "format_expression",
    "free_variables",
    "grid_points",
    "kernel_norms",
    "kernel_rho",
    "kernel_tau",
    "load_problem",
    "load_report",
    "moment_report_document",
    "operator_bound_check",
    "parse_expression",
    "problem_document",
    "problem_from_document",
    "solve_grid_primal",
    "solve_lp",
    "solve_option_bound",
    "standardize",
    "validate_partition",
    "write_problem",
    "write_report",
]
