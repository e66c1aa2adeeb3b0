"""Command-line entry points.

Subcommands:

- ``solve <problem.json>``: both solution routes plus diagnostics and an
  optional JSON report.
- ``primal <problem.json> --grid R``: the grid/collocation primal only.
- ``dual <problem.json> --tol T``: the exchange/collocation dual only.
- ``slater <problem.json>``: strict-feasibility diagnostics only.
- ``option-bound``: build and solve a payoff-bound problem from a forward
  and optional call quotes, without a problem file.
- ``validate <problem.json>``: parse and validate, reporting diagnostics.

Exit codes: 0 solved/converged/valid; 2 gap remains or not converged;
3 infeasible or unbounded; 4 invalid input.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Sequence

from .density import (
    LpDensityProblem,
    check_lp_slater,
    collocation_report,
    discretize_lp_density,
)
from .expressions import ExpressionError
from .fileio import (
    LoadedProblem,
    ProblemFormatError,
    density_report_document,
    load_problem,
    moment_report_document,
    write_report,
)
from .moment import (
    ExchangeError,
    MomentProblem,
    ReportStatus,
    SolverConfig,
    check_dual_slater,
    check_primal_slater,
    duality_report,
    exchange_solve,
    solve_grid_primal,
)
from .options import solve_option_bound
from .simplex import LPStatus, solve_lp

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4

_STATUS_EXIT = {
    ReportStatus.STRONG_DUALITY: EXIT_OK,
    ReportStatus.GAP_REMAINS: EXIT_NOT_CONVERGED,
    ReportStatus.NOT_CONVERGED: EXIT_NOT_CONVERGED,
    ReportStatus.PRIMAL_INFEASIBLE: EXIT_INFEASIBLE,
    ReportStatus.DUAL_UNBOUNDED: EXIT_INFEASIBLE,
}

_LP_EXIT = {
    LPStatus.OPTIMAL: EXIT_OK,
    LPStatus.INFEASIBLE: EXIT_INFEASIBLE,
    LPStatus.UNBOUNDED: EXIT_INFEASIBLE,
}


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.9g}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measurelp",
        description="Primal/dual bounds for linear programs over measures and densities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve both routes and report the gap")
    solve.add_argument("problem", help="problem JSON file")
    solve.add_argument("--grid", type=int, help="grid resolution per axis")
    solve.add_argument("--tol", type=float, help="dual feasibility tolerance")
    solve.add_argument("--max-iters", type=int, help="exchange iteration limit")
    solve.add_argument("--report", help="write a JSON report here")

    primal = sub.add_parser("primal", help="solve the grid/collocation primal only")
    primal.add_argument("problem")
    primal.add_argument("--grid", type=int, required=True)

    dual = sub.add_parser("dual", help="solve the exchange/collocation dual only")
    dual.add_argument("problem")
    dual.add_argument("--tol", type=float, required=True)
    dual.add_argument("--max-iters", type=int)

    slater = sub.add_parser("slater", help="strict-feasibility diagnostics")
    slater.add_argument("problem")

    option = sub.add_parser("option-bound", help="payoff bound from forward and quotes")
    option.add_argument("--domain", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    option.add_argument("--forward", type=float, required=True)
    option.add_argument(
        "--quote", nargs=2, type=float, action="append", default=[],
        metavar=("STRIKE", "PRICE"),
    )
    option.add_argument("--payoff", required=True, help="payoff expression in x1")
    option.add_argument("--direction", choices=("sup", "inf"), required=True)
    option.add_argument("--grid", type=int)
    option.add_argument("--tol", type=float)
    option.add_argument("--max-iters", type=int)
    option.add_argument("--report", help="write a JSON report here")

    validate = sub.add_parser("validate", help="check a problem file and exit")
    validate.add_argument("problem")
    return parser


def _moment_config(loaded: LoadedProblem, args: argparse.Namespace) -> SolverConfig:
    overrides = dict(loaded.solver)
    if getattr(args, "grid", None) is not None:
        overrides["grid_resolution"] = args.grid
    if getattr(args, "tol", None) is not None:
        overrides["tol"] = args.tol
    if getattr(args, "max_iters", None) is not None:
        overrides["max_iters"] = args.max_iters
    return SolverConfig(**overrides)


def _density_resolutions(loaded: LoadedProblem, args: argparse.Namespace) -> dict:
    solver = dict(loaded.solver)
    if getattr(args, "grid", None) is not None:
        solver["x_resolution"] = args.grid
    return {
        "x_resolution": solver.get("x_resolution", 64),
        "y_resolution": solver.get("y_resolution"),
        "z_resolution": solver.get("z_resolution"),
    }


def _cmd_solve(args: argparse.Namespace) -> int:
    loaded = load_problem(args.problem)
    started = time.perf_counter()
    if loaded.kind == "moment":
        config = _moment_config(loaded, args)
        report = duality_report(loaded.problem, config)
        elapsed = time.perf_counter() - started
        print(f"problem: {loaded.name or args.problem} (moment)")
        print(f"primal value (grid {config.grid_resolution}): {_fmt(report.primal_value)}")
        print(
            f"dual value (exchange, tol {config.tol:g}): {_fmt(report.dual_value)}"
            f" [{report.iterations} iteration(s)]"
        )
        print(f"gap (dual - primal): {_fmt(report.gap)}")
        print(f"max dual violation on verification mesh: {_fmt(report.max_dual_violation)}")
        for note in report.notes:
            print(f"note: {note}")
        print(f"status: {report.status.value}")
        if args.report:
            doc = moment_report_document(
                report, loaded.name, config, {"total_seconds": elapsed}
            )
            write_report(doc, args.report)
        return _STATUS_EXIT[report.status]

    res = _density_resolutions(loaded, args)
    gap_rtol = loaded.solver.get("gap_rtol", 1e-3)
    report = collocation_report(loaded.problem, gap_rtol=gap_rtol, **res)
    slater = check_lp_slater(loaded.problem, **res)
    elapsed = time.perf_counter() - started
    print(f"problem: {loaded.name or args.problem} (lp_density, p={loaded.problem.p:g})")
    print(f"primal value (collocation {report.x_resolution}): {_fmt(report.primal_value)}")
    print(f"dual value (collocation): {_fmt(report.dual_value)}")
    print(f"gap (dual - primal): {_fmt(report.gap)}")
    for note in report.notes:
        print(f"note: {note}")
    print(f"status: {report.status.value}")
    if args.report:
        doc = density_report_document(
            report, loaded.name, loaded.problem.p, slater, {"total_seconds": elapsed}
        )
        write_report(doc, args.report)
    return _STATUS_EXIT[report.status]


def _cmd_primal(args: argparse.Namespace) -> int:
    loaded = load_problem(args.problem)
    if loaded.kind == "moment":
        solve = solve_grid_primal(loaded.problem, args.grid)
        print(f"grid primal ({args.grid} per axis): {solve.status.value}")
        if solve.value is not None:
            print(f"value: {_fmt(solve.value)}")
            atoms = solve.measure
            for p, w in zip(atoms.points, atoms.weights):
                print(f"atom: weight {w:.9g} at {tuple(round(float(v), 12) for v in p)}")
        return _LP_EXIT[solve.status]
    primal, _ = discretize_lp_density(loaded.problem, args.grid)
    out = solve_lp(primal)
    print(f"collocation primal ({args.grid} per axis): {out.status.value}")
    if out.value is not None:
        print(f"value: {_fmt(out.value)}")
    return _LP_EXIT[out.status]


def _cmd_dual(args: argparse.Namespace) -> int:
    loaded = load_problem(args.problem)
    if loaded.kind == "moment":
        kwargs = {"tol": args.tol}
        if args.max_iters is not None:
            kwargs["max_iters"] = args.max_iters
        result = exchange_solve(loaded.problem, **kwargs)
        print(f"exchange dual: {result.status} after {result.iterations} iteration(s)")
        if result.value is not None:
            print(f"value: {_fmt(result.value)}")
        if result.final_slack is not None:
            print(f"final separation slack: {result.final_slack:.3g}")
        if result.status == "converged":
            return EXIT_OK
        if result.status == "dual_unbounded":
            return EXIT_INFEASIBLE
        return EXIT_NOT_CONVERGED
    _, dual = discretize_lp_density(loaded.problem, 64)
    out = solve_lp(dual)
    print(f"collocation dual (64 per axis): {out.status.value}")
    if out.value is not None:
        print(f"value: {_fmt(out.value)}")
    return _LP_EXIT[out.status]


def _cmd_slater(args: argparse.Namespace) -> int:
    loaded = load_problem(args.problem)
    if loaded.kind == "moment":
        mp: MomentProblem = loaded.problem
        primal = check_primal_slater(mp)
        dual = check_dual_slater(mp)
        print(f"primal margin: {_fmt(primal.margin)} (feasible: {primal.feasible})")
        print(f"equality rank: {primal.equality_rank} of {primal.n_equalities}")
        if primal.rank_deficient:
            print("note: equality constraints are rank deficient")
        print(
            f"dual margin: {_fmt(dual.margin)} (converged: {dual.converged}, "
            f"capped: {dual.capped})"
        )
        if not primal.feasible:
            return EXIT_INFEASIBLE
        if not dual.converged:
            return EXIT_NOT_CONVERGED
        return EXIT_OK
    pb: LpDensityProblem = loaded.problem
    rep = check_lp_slater(pb)
    print(f"margin: {_fmt(rep.margin if rep.feasible else None)} (feasible: {rep.feasible})")
    print(f"equality rank: {rep.equality_rank} of {rep.n_equality_rows}")
    if rep.rank_deficient:
        print("note: equality rows are rank deficient")
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def _cmd_option_bound(args: argparse.Namespace) -> int:
    overrides = {}
    if args.grid is not None:
        overrides["grid_resolution"] = args.grid
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    config = SolverConfig(**overrides)
    started = time.perf_counter()
    result = solve_option_bound(
        spot_domain=args.domain,
        forward=args.forward,
        vanilla_quotes=[(k, p) for k, p in args.quote],
        payoff=args.payoff,
        direction=args.direction,
        config=config,
    )
    elapsed = time.perf_counter() - started
    report = result.report
    word = "upper" if args.direction == "sup" else "lower"
    print(f"direction: {args.direction} ({word} bound)")
    print(f"certified bound: {_fmt(result.bound)}")
    print(f"attained by atomic distribution: {_fmt(result.attained)}")
    print(f"status: {report.status.value}")
    if args.report:
        doc = moment_report_document(
            report, result.problem.name, config, {"total_seconds": elapsed}
        )
        write_report(doc, args.report)
    return _STATUS_EXIT[report.status]


def _cmd_validate(args: argparse.Namespace) -> int:
    loaded = load_problem(args.problem)
    problem = loaded.problem
    if loaded.kind == "moment":
        print(
            f"valid moment problem: {loaded.name or args.problem} "
            f"({len(problem.domain.boxes)} box(es), dimension {problem.domain.dim}, "
            f"{problem.n_ineq} inequality(ies), {problem.n_eq} equality(ies))"
        )
    else:
        families = []
        if problem.has_inequalities:
            families.append("inequality kernel")
        if problem.has_equalities:
            families.append("equality kernel")
        print(
            f"valid lp_density problem: {loaded.name or args.problem} "
            f"(dimension {problem.domain.dim}, p={problem.p:g}, {', '.join(families)})"
        )
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "primal": _cmd_primal,
    "dual": _cmd_dual,
    "slater": _cmd_slater,
    "option-bound": _cmd_option_bound,
    "validate": _cmd_validate,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, dispatch, and map every outcome to an exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT
    try:
        return _COMMANDS[args.command](args)
    except (ProblemFormatError, ExpressionError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ExchangeError as e:
        print(f"solver stopped: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
