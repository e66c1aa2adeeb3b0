"""Problem and report files: canonical JSON, loaders, and document builders.

Problem files carry one of two kinds: ``"moment"`` (piecewise data over a box
partition) or ``"lp_density"`` (kernel-constrained density problems), plus
optional solver overrides.  Report files echo every solve result field, the
solver configuration, and wall-clock timings.

The writer is canonical so identical results produce identical bytes: keys
sorted, floats printed with ``%.17g`` (with ``.0`` appended when the result
has no ``.`` or exponent, so floats stay visibly floats), a single trailing
newline, and non-finite numbers rejected -- absent values are ``null``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .density import CollocationReport, DensitySlaterReport, LpDensityProblem
from .expressions import Expression, format_expression, parse_expression
from .geometry import Box, Partition, validate_partition
from .moment import (
    DualityReport,
    DualPoint,
    DualSlaterReport,
    MomentProblem,
    PiecewiseFunction,
    PrimalSlaterReport,
    SolverConfig,
)

FORMAT_VERSION = "1"

PROBLEM_KINDS = ("moment", "lp_density")

MOMENT_SOLVER_KEYS = {
    "grid_resolution": int,
    "tol": float,
    "max_iters": int,
    "scan_resolution": int,
    "refine_steps": int,
    "gap_rtol": float,
    "verification_factor": int,
    "slater_resolution": int,
}
DENSITY_SOLVER_KEYS = {
    "x_resolution": int,
    "y_resolution": int,
    "z_resolution": int,
    "gap_rtol": float,
    "quad_resolution": int,
    "slater_resolution": int,
}


class ProblemFormatError(ValueError):
    """A problem document failed validation; ``field`` names the offender."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


# ---------------------------------------------------------------------------
# canonical JSON


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(
            "non-finite numbers are not representable in report files; use null"
        )
    text = "%.17g" % value
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


def _serialize(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(_format_float(value))
    elif isinstance(value, Mapping):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise ValueError(f"object keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _serialize(value[key], out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _serialize(item, out)
        out.append("]")
    else:
        raise ValueError(f"cannot serialize {type(value).__name__} canonically")


def canonical_json(doc: Any) -> str:
    """Deterministic JSON text for ``doc``, newline-terminated."""
    out: list[str] = []
    _serialize(doc, out)
    out.append("\n")
    return "".join(out)


def write_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(canonical_json(doc), encoding="utf-8")


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


# ---------------------------------------------------------------------------
# document field access


def _get(doc: Mapping, key: str, kind: type | tuple, path: str, required=True):
    if key not in doc:
        if required:
            raise ProblemFormatError("missing required field", f"{path}{key}")
        return None
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        want = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ProblemFormatError(
            f"expected {want}, got {type(value).__name__}", f"{path}{key}"
        )
    return value


def _float_list(doc: Mapping, key: str, path: str) -> list[float]:
    raw = _get(doc, key, list, path)
    values = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ProblemFormatError(
                f"expected number, got {type(v).__name__}", f"{path}{key}[{i}]"
            )
        values.append(float(v))
    return values


def _box_from(doc: Any, path: str) -> Box:
    if not isinstance(doc, Mapping):
        raise ProblemFormatError("expected an object with lower/upper", path)
    lower = _float_list(doc, "lower", f"{path}.")
    upper = _float_list(doc, "upper", f"{path}.")
    try:
        return Box(tuple(lower), tuple(upper))
    except ValueError as e:
        raise ProblemFormatError(str(e), path) from e


def _box_doc(box: Box) -> dict:
    return {"lower": list(box.lower), "upper": list(box.upper)}


def _expression_from(source: Any, arity: int, prefixes, path: str) -> Expression:
    if not isinstance(source, str):
        raise ProblemFormatError(
            f"expected expression text, got {type(source).__name__}", path
        )
    try:
        return parse_expression(source, arity, prefixes)
    except ValueError as e:  # ParseError messages already carry the byte offset
        raise ProblemFormatError(str(e), path) from e


def _solver_overrides(doc: Mapping, allowed: Mapping[str, type], path: str) -> dict:
    raw = _get(doc, "solver", dict, path, required=False) or {}
    overrides = {}
    for key in sorted(raw):
        if key not in allowed:
            raise ProblemFormatError(
                f"unknown solver option (allowed: {', '.join(sorted(allowed))})",
                f"{path}solver.{key}",
            )
        overrides[key] = _get(raw, key, allowed[key], f"{path}solver.")
    return overrides


# ---------------------------------------------------------------------------
# problem loading


@dataclass(frozen=True)
class LoadedProblem:
    """A parsed problem file: the problem object plus solver overrides."""

    kind: str
    name: str
    problem: MomentProblem | LpDensityProblem
    solver: dict

    def solver_config(self) -> SolverConfig:
        """Moment-problem SolverConfig with the file's overrides applied."""
        if self.kind != "moment":
            raise ValueError("solver_config applies to moment problems only")
        return SolverConfig(**self.solver)


def _load_moment(doc: Mapping) -> MomentProblem:
    dimension = _get(doc, "dimension", int, "")
    hull = _box_from(_get(doc, "hull", dict, ""), "hull")
    raw_boxes = _get(doc, "boxes", list, "")
    if not raw_boxes:
        raise ProblemFormatError("need at least one box", "boxes")
    boxes = [_box_from(b, f"boxes[{i}]") for i, b in enumerate(raw_boxes)]
    for i, box in enumerate(boxes):
        if box.dim != dimension:
            raise ProblemFormatError(
                f"box dimension {box.dim} does not match dimension {dimension}",
                f"boxes[{i}]",
            )
    if hull.dim != dimension:
        raise ProblemFormatError(
            f"hull dimension {hull.dim} does not match dimension {dimension}", "hull"
        )
    partition = Partition(tuple(boxes))
    report = validate_partition(partition, hull)
    if not report.ok:
        raise ProblemFormatError(
            "boxes do not partition the hull: " + "; ".join(report.problems), "boxes"
        )

    def pieces_from(raw: Any, path: str) -> PiecewiseFunction:
        if not isinstance(raw, list):
            raise ProblemFormatError(
                f"expected one expression per box, got {type(raw).__name__}", path
            )
        if len(raw) != len(boxes):
            raise ProblemFormatError(
                f"expected {len(boxes)} piece(s), got {len(raw)}", path
            )
        exprs = tuple(
            _expression_from(src, dimension, ("x",), f"{path}[{i}]")
            for i, src in enumerate(raw)
        )
        return PiecewiseFunction(partition, exprs)

    def constraints_from(key: str):
        raw = _get(doc, key, list, "", required=False) or []
        out = []
        for i, entry in enumerate(raw):
            path = f"{key}[{i}]"
            if not isinstance(entry, Mapping):
                raise ProblemFormatError("expected an object with pieces/bound", path)
            fn = pieces_from(_get(entry, "pieces", list, f"{path}."), f"{path}.pieces")
            bound = _get(entry, "bound", float, f"{path}.")
            out.append((fn, float(bound)))
        return tuple(out)

    objective = pieces_from(_get(doc, "objective", list, ""), "objective")
    inequalities = constraints_from("inequalities")
    equalities = constraints_from("equalities")
    try:
        return MomentProblem(
            domain=partition,
            hull=hull,
            objective=objective,
            inequalities=inequalities,
            equalities=equalities,
            name=_get(doc, "name", str, "", required=False) or "",
        )
    except ValueError as e:
        raise ProblemFormatError(str(e)) from e


def _load_density(doc: Mapping) -> LpDensityProblem:
    domain = _box_from(_get(doc, "domain", dict, ""), "domain")
    n = domain.dim
    p = _get(doc, "p", float, "", required=False)
    if p is not None and not (1.0 < float(p) < math.inf):
        raise ProblemFormatError(f"exponent p must satisfy 1 < p < inf, got {p}", "p")
    objective = _expression_from(_get(doc, "objective", str, ""), n, ("x",), "objective")

    def family(key: str, prefix: str):
        raw = _get(doc, key, dict, "", required=False)
        if raw is None:
            return None, None, None
        path = f"{key}."
        box = _box_from(_get(raw, "box", dict, path), f"{key}.box")
        kernel = _expression_from(
            _get(raw, "kernel", str, path),
            box.dim + n,
            ((prefix, box.dim), ("x", n)),
            f"{key}.kernel",
        )
        bound = _expression_from(
            _get(raw, "bound", str, path), box.dim, ((prefix, box.dim),), f"{key}.bound"
        )
        return kernel, bound, box

    kernel_a, bound_a, ineq_domain = family("inequality", "y")
    kernel_b, bound_b, eq_domain = family("equality", "z")
    try:
        return LpDensityProblem(
            domain=domain,
            objective=objective,
            p=2.0 if p is None else float(p),
            kernel_a=kernel_a,
            bound_a=bound_a,
            ineq_domain=ineq_domain,
            kernel_b=kernel_b,
            bound_b=bound_b,
            eq_domain=eq_domain,
            name=_get(doc, "name", str, "", required=False) or "lp-density",
        )
    except ValueError as e:
        raise ProblemFormatError(str(e)) from e


def problem_from_document(doc: Any) -> LoadedProblem:
    """Validate a decoded problem document and build the problem object."""
    if not isinstance(doc, Mapping):
        raise ProblemFormatError("problem document must be a JSON object")
    version = _get(doc, "format_version", str, "")
    if version != FORMAT_VERSION:
        raise ProblemFormatError(
            f"unsupported format_version {version!r} (supported: {FORMAT_VERSION!r})",
            "format_version",
        )
    kind = _get(doc, "kind", str, "")
    if kind not in PROBLEM_KINDS:
        raise ProblemFormatError(
            f"kind must be one of {PROBLEM_KINDS}, got {kind!r}", "kind"
        )
    if kind == "moment":
        problem = _load_moment(doc)
        solver = _solver_overrides(doc, MOMENT_SOLVER_KEYS, "")
    else:
        problem = _load_density(doc)
        solver = _solver_overrides(doc, DENSITY_SOLVER_KEYS, "")
    return LoadedProblem(kind=kind, name=problem.name, problem=problem, solver=solver)


def load_problem(path: str | Path) -> LoadedProblem:
    """Read, decode, and validate a problem file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ProblemFormatError(f"cannot read problem file: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"invalid JSON: {e}") from e
    return problem_from_document(doc)


def problem_document(loaded: LoadedProblem) -> dict:
    """Serialize a loaded problem back to its document form."""
    if loaded.kind == "moment":
        mp: MomentProblem = loaded.problem
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "moment",
            "name": mp.name,
            "dimension": mp.domain.dim,
            "hull": _box_doc(mp.hull),
            "boxes": [_box_doc(b) for b in mp.domain.boxes],
            "objective": [format_expression(e) for e in mp.objective.pieces],
            "inequalities": [
                {"pieces": [format_expression(e) for e in fn.pieces], "bound": bound}
                for fn, bound in mp.inequalities
            ],
            "equalities": [
                {"pieces": [format_expression(e) for e in fn.pieces], "bound": bound}
                for fn, bound in mp.equalities
            ],
        }
    else:
        pb: LpDensityProblem = loaded.problem
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "lp_density",
            "name": pb.name,
            "domain": _box_doc(pb.domain),
            "objective": format_expression(pb.objective),
            "p": pb.p,
        }
        if pb.has_inequalities:
            doc["inequality"] = {
                "kernel": format_expression(pb.kernel_a),
                "bound": format_expression(pb.bound_a),
                "box": _box_doc(pb.ineq_domain),
            }
        if pb.has_equalities:
            doc["equality"] = {
                "kernel": format_expression(pb.kernel_b),
                "bound": format_expression(pb.bound_b),
                "box": _box_doc(pb.eq_domain),
            }
    if loaded.solver:
        doc["solver"] = dict(loaded.solver)
    return doc


def write_problem(loaded: LoadedProblem, path: str | Path) -> None:
    write_json(problem_document(loaded), path)


# ---------------------------------------------------------------------------
# report documents


def _dual_doc(dual: DualPoint | None) -> dict | None:
    if dual is None:
        return None
    return {"y": [float(v) for v in dual.y], "z": [float(v) for v in dual.z]}


def _primal_slater_doc(rep: PrimalSlaterReport) -> dict:
    return {
        "margin": _finite_or_none(rep.margin),
        "feasible": rep.feasible,
        "equality_rank": rep.equality_rank,
        "n_equalities": rep.n_equalities,
        "capped": rep.capped,
    }


def _dual_slater_doc(rep: DualSlaterReport) -> dict:
    return {
        "margin": _finite_or_none(rep.margin),
        "witness": _dual_doc(rep.witness),
        "converged": rep.converged,
        "capped": rep.capped,
        "iterations": rep.iterations,
    }


def moment_report_document(
    report: DualityReport,
    name: str,
    config: SolverConfig,
    timings: Mapping[str, float] | None = None,
) -> dict:
    """Full report document for a moment-problem solve."""
    atoms = None
    if report.atoms is not None:
        atoms = [
            {"point": [float(v) for v in p], "weight": float(w), "box": int(i)}
            for p, w, i in zip(
                report.atoms.points, report.atoms.weights, report.atoms.box_indices
            )
        ]
    primal = _finite_or_none(report.primal_value)
    dual = _finite_or_none(report.dual_value)
    gap = None if primal is None or dual is None else dual - primal
    return {
        "format_version": FORMAT_VERSION,
        "kind": "moment",
        "name": name,
        "status": report.status.value,
        "primal_value": primal,
        "dual_value": dual,
        "gap": gap,
        "max_dual_violation": _finite_or_none(report.max_dual_violation),
        "iterations": report.iterations,
        "atoms": atoms,
        "dual": _dual_doc(report.dual),
        "primal_slater": _primal_slater_doc(report.primal_slater),
        "dual_slater": _dual_slater_doc(report.dual_slater),
        "has_mass_bound": report.has_mass_bound,
        "notes": list(report.notes),
        "solver": {
            "grid_resolution": config.grid_resolution,
            "tol": config.tol,
            "max_iters": config.max_iters,
            "scan_resolution": config.scan_resolution,
            "refine_steps": config.refine_steps,
            "gap_rtol": config.gap_rtol,
            "verification_factor": config.verification_factor,
            "slater_resolution": config.slater_resolution,
        },
        "timings": dict(timings or {}),
    }


def density_report_document(
    report: CollocationReport,
    name: str,
    p: float,
    slater: DensitySlaterReport | None = None,
    timings: Mapping[str, float] | None = None,
) -> dict:
    """Full report document for a density-problem solve."""
    primal = _finite_or_none(report.primal_value)
    dual = _finite_or_none(report.dual_value)
    gap = None if primal is None or dual is None else dual - primal
    slater_doc = None
    if slater is not None:
        slater_doc = {
            "margin": _finite_or_none(slater.margin),
            "feasible": slater.feasible,
            "capped": slater.capped,
            "equality_rank": slater.equality_rank,
            "n_equality_rows": slater.n_equality_rows,
        }
    return {
        "format_version": FORMAT_VERSION,
        "kind": "lp_density",
        "name": name,
        "status": report.status.value,
        "primal_value": primal,
        "dual_value": dual,
        "gap": gap,
        "refined_primal_value": _finite_or_none(report.refined_primal_value),
        "slater": slater_doc,
        "notes": list(report.notes),
        "solver": {
            "p": p,
            "x_resolution": report.x_resolution,
            "y_resolution": report.y_resolution,
            "z_resolution": report.z_resolution,
        },
        "timings": dict(timings or {}),
    }


def write_report(doc: Mapping, path: str | Path) -> None:
    write_json(doc, path)


def load_report(path: str | Path) -> dict:
    """Read a report file back into a plain dict."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("report file must hold a JSON object")
    return doc
