"""Linear programs over nonnegative densities on a box.

A density problem asks for ``max ∫ c(x) f(x) dx`` over densities ``f ≥ 0`` on a
box, subject to kernel constraints ``∫ A(y,x) f(x) dx ≤ a(y)`` for every ``y``
in an inequality box and ``∫ B(z,x) f(x) dx = b(z)`` for every ``z`` in an
equality box.  This module provides

- quadrature evaluators for the kernel column norms ``tau(x) = ||A(.,x)||_p``
  and row norms ``rho(y) = ||A(y,.)||_q`` (conjugate exponents 1/p + 1/q = 1),
- a randomized check that the induced integral operator obeys the triangle /
  Hoelder bound chain and a Lipschitz modulus ``M = max sampled rho``,
- a collocation discretization producing a primal/dual pair of finite LPs
  that are exact LP duals of each other (up to quadrature weighting), and
- a strict-feasibility margin diagnostic with a rank report for the
  discretized equality operator.

All quadrature uses the composite midpoint rule, which matches the piecewise
constant density class used throughout: a discrete density takes one value
per grid cell, and every norm or integral below is the midpoint-rule value on
the same cells.  The exponent ``p`` enters only the norm checks; the
collocation LPs themselves are independent of ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .expressions import Expression, evaluate_many
from .geometry import MAX_GRID_POINTS, Box
from .moment import SLATER_CAP, ReportStatus
from .simplex import FiniteLP, LPStatus, make_lp, solve_lp

DEFAULT_QUAD_RESOLUTION = 128
ROUNDOFF_SLACK = 1e-12


@dataclass(frozen=True)
class LpDensityProblem:
    """max ∫ c f dx over f ≥ 0 with kernel inequality/equality constraints.

    ``kernel_a`` takes the inequality-point variables first and the domain
    variables second (arity ``ineq_domain.dim + domain.dim``); ``kernel_b``
    likewise with the equality-point variables first.  Each constraint family
    is optional but must come complete (kernel, bound, box); at least one
    family is required.
    """

    domain: Box
    objective: Expression
    p: float = 2.0
    kernel_a: Expression | None = None
    bound_a: Expression | None = None
    ineq_domain: Box | None = None
    kernel_b: Expression | None = None
    bound_b: Expression | None = None
    eq_domain: Box | None = None
    name: str = "lp-density"

    def __post_init__(self):
        if not (math.isfinite(self.p) and 1.0 < self.p):
            raise ValueError(f"exponent p must satisfy 1 < p < inf, got {self.p}")
        if self.objective.arity != self.domain.dim:
            raise ValueError(
                f"objective arity {self.objective.arity} does not match "
                f"domain dimension {self.domain.dim}"
            )
        for label, kernel, bound, box in (
            ("a", self.kernel_a, self.bound_a, self.ineq_domain),
            ("b", self.kernel_b, self.bound_b, self.eq_domain),
        ):
            parts = (kernel, bound, box)
            if all(v is None for v in parts):
                continue
            if any(v is None for v in parts):
                raise ValueError(
                    f"constraint family {label!r} needs kernel, bound, and box together"
                )
            if kernel.arity != box.dim + self.domain.dim:
                raise ValueError(
                    f"kernel {label!r} arity {kernel.arity} does not match "
                    f"{box.dim} + {self.domain.dim}"
                )
            if bound.arity != box.dim:
                raise ValueError(
                    f"bound {label!r} arity {bound.arity} does not match "
                    f"box dimension {box.dim}"
                )
        if self.kernel_a is None and self.kernel_b is None:
            raise ValueError("need at least one constraint family")

    @property
    def q(self) -> float:
        """Conjugate exponent, 1/p + 1/q = 1."""
        return self.p / (self.p - 1.0)

    @property
    def has_inequalities(self) -> bool:
        return self.kernel_a is not None

    @property
    def has_equalities(self) -> bool:
        return self.kernel_b is not None


def midpoint_axes(box: Box, resolution) -> list[np.ndarray]:
    """Midpoints of ``resolution`` equal cells per axis (broadcastable)."""
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (box.dim,))
    if np.any(res < 1):
        raise ValueError(f"resolution must be >= 1 per axis, got {resolution!r}")
    total = int(np.prod(res.astype(float)))
    if float(np.prod(res.astype(float))) > MAX_GRID_POINTS:
        raise ValueError(f"grid of {total} points exceeds limit {MAX_GRID_POINTS}")
    axes = []
    for l, u, r in zip(box.lower, box.upper, res):
        step = (u - l) / int(r)
        axes.append(l + (np.arange(int(r)) + 0.5) * step)
    return axes


def midpoint_grid(box: Box, resolution) -> tuple[np.ndarray, float]:
    """Cell midpoints (lexicographic, shape ``(count, dim)``) and cell volume."""
    axes = midpoint_axes(box, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    cells = int(points.shape[0])
    return points, box.volume / cells


def _pair_points(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """All (left_j, right_i) concatenations, left-major ordering."""
    j, i = left.shape[0], right.shape[0]
    return np.concatenate(
        [np.repeat(left, i, axis=0), np.tile(right, (j, 1))], axis=1
    )


def _kernel_table(kernel: Expression, outer: np.ndarray, x_pts: np.ndarray) -> np.ndarray:
    """Kernel values on the product grid, shape (len(outer), len(x_pts))."""
    values = evaluate_many(kernel, _pair_points(outer, x_pts))
    return values.reshape(outer.shape[0], x_pts.shape[0])


def _family(pb: LpDensityProblem, which: str) -> tuple[Expression, Expression, Box]:
    if which == "a":
        parts = pb.kernel_a, pb.bound_a, pb.ineq_domain
    elif which == "b":
        parts = pb.kernel_b, pb.bound_b, pb.eq_domain
    else:
        raise ValueError(f"kernel selector must be 'a' or 'b', got {which!r}")
    if parts[0] is None:
        raise ValueError(f"problem has no {which!r} constraint family")
    return parts


def kernel_tau(
    pb: LpDensityProblem,
    which: str,
    x: Sequence[float],
    quad_resolution: int = DEFAULT_QUAD_RESOLUTION,
) -> float:
    """Column norm ``(∫ |K(y, x)|^p dy)^(1/p)`` by midpoint quadrature."""
    kernel, _, kbox = _family(pb, which)
    point = tuple(float(v) for v in x)
    if not pb.domain.closure_contains(point, tol=1e-12):
        raise ValueError(f"point {point} lies outside the closed domain")
    outer, weight = midpoint_grid(kbox, quad_resolution)
    column = _kernel_table(kernel, outer, np.asarray([point]))[:, 0]
    return float((np.sum(np.abs(column) ** pb.p) * weight) ** (1.0 / pb.p))


def kernel_rho(
    pb: LpDensityProblem,
    which: str,
    y: Sequence[float],
    quad_resolution: int = DEFAULT_QUAD_RESOLUTION,
) -> float:
    """Row norm ``(∫ |K(y, x)|^q dx)^(1/q)`` by midpoint quadrature."""
    kernel, _, kbox = _family(pb, which)
    point = tuple(float(v) for v in y)
    if not kbox.closure_contains(point, tol=1e-12):
        raise ValueError(f"point {point} lies outside the closed constraint box")
    x_pts, weight = midpoint_grid(pb.domain, quad_resolution)
    row = _kernel_table(kernel, np.asarray([point]), x_pts)[0, :]
    return float((np.sum(np.abs(row) ** pb.q) * weight) ** (1.0 / pb.q))


@dataclass(frozen=True)
class KernelNorms:
    """Quadrature evaluators and summary norms for one kernel family.

    ``uniform_bound`` is the maximum of ``rho`` over the sampled constraint
    grid (the computable stand-in for an essential supremum); ``tau_norm`` is
    the q-norm of ``tau`` over the domain, the constant in the Hoelder bound
    ``∫ |f| tau ≤ ||f||_p * tau_norm``.
    """

    tau: Callable[[Sequence[float]], float]
    rho: Callable[[Sequence[float]], float]
    uniform_bound: float
    tau_norm: float


def _norm_summary(
    pb: LpDensityProblem, which: str, quad_resolution: int
) -> tuple[float, float]:
    """(tau_norm, uniform_bound) on midpoint grids at one resolution."""
    kernel, _, kbox = _family(pb, which)
    outer, dy = midpoint_grid(kbox, quad_resolution)
    x_pts, dx = midpoint_grid(pb.domain, quad_resolution)
    table = _kernel_table(kernel, outer, x_pts)
    tau = (np.sum(np.abs(table) ** pb.p, axis=0) * dy) ** (1.0 / pb.p)
    rho = (np.sum(np.abs(table) ** pb.q, axis=1) * dx) ** (1.0 / pb.q)
    tau_norm = float((np.sum(tau**pb.q) * dx) ** (1.0 / pb.q))
    return tau_norm, float(np.max(rho))


def kernel_norms(
    pb: LpDensityProblem,
    which: str = "a",
    quad_resolution: int = DEFAULT_QUAD_RESOLUTION,
) -> KernelNorms:
    """Bundle tau/rho evaluators with their sampled summary norms."""
    tau_norm, uniform_bound = _norm_summary(pb, which, quad_resolution)
    return KernelNorms(
        tau=lambda x: kernel_tau(pb, which, x, quad_resolution),
        rho=lambda y: kernel_rho(pb, which, y, quad_resolution),
        uniform_bound=uniform_bound,
        tau_norm=tau_norm,
    )


@dataclass(frozen=True)
class TrialBound:
    """One random-density check of the norm-bound chain."""

    operator_norm: float
    envelope_integral: float
    holder_bound: float
    lipschitz_lhs: float
    lipschitz_rhs: float
    passed: bool


@dataclass(frozen=True)
class OperatorBoundReport:
    """Outcome of ``operator_bound_check`` for one kernel family."""

    kernel: str
    p: float
    q: float
    quad_resolution: int
    tau_norm: float
    uniform_bound: float
    refinement_delta: float
    refinement_ratio: float
    eps_quad: float
    trials: tuple[TrialBound, ...]
    notes: tuple[str, ...]

    @property
    def all_passed(self) -> bool:
        return all(t.passed for t in self.trials)


def operator_bound_check(
    pb: LpDensityProblem,
    which: str = "a",
    trials: int = 100,
    quad_resolution: int = DEFAULT_QUAD_RESOLUTION,
    seed: int = 0,
) -> OperatorBoundReport:
    """Check the norm-bound chain on random piecewise-constant densities.

    For each trial, drawing cell values ``f`` (and a second density ``f2``)
    uniformly from [-1, 1] on the quadrature cells, verifies

    1. ``||Kf||_p ≤ ∫ |f| tau ≤ ||f||_p * ||tau||_q + eps_quad`` and
    2. ``||K f - K f2||_p ≤ M * ||f - f2||_p + eps_quad`` with
       ``M = max sampled rho``,

    where ``eps_quad`` is ten times the change of the summary norms between
    ``quad_resolution`` and its doubling.  The report also records the ratio
    of successive refinement deltas (about 4 for smooth kernels under the
    midpoint rule) and flags a row-norm maximum that keeps growing under
    refinement, since the Lipschitz constant is then unreliable.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    kernel, _, kbox = _family(pb, which)
    coarse = max(2, quad_resolution // 2)
    tau_c, rho_c = _norm_summary(pb, which, coarse)
    tau_norm, uniform_bound = _norm_summary(pb, which, quad_resolution)
    tau_f, rho_f = _norm_summary(pb, which, 2 * quad_resolution)
    delta_coarse = max(abs(tau_c - tau_norm), abs(rho_c - uniform_bound))
    delta_fine = max(abs(tau_norm - tau_f), abs(uniform_bound - rho_f))
    ratio = delta_coarse / delta_fine if delta_fine > 0.0 else math.inf
    eps_quad = 10.0 * delta_fine

    notes: list[str] = []
    if abs(rho_f - uniform_bound) > 0.05 * (1.0 + uniform_bound):
        notes.append(
            "row norm rho still growing under quadrature refinement; "
            "uniform bound M is unreliable"
        )

    outer, dy = midpoint_grid(kbox, quad_resolution)
    x_pts, dx = midpoint_grid(pb.domain, quad_resolution)
    table = _kernel_table(kernel, outer, x_pts)
    tau = (np.sum(np.abs(table) ** pb.p, axis=0) * dy) ** (1.0 / pb.p)

    def image_norm(values: np.ndarray) -> float:
        image = (table @ values) * dx
        return float((np.sum(np.abs(image) ** pb.p) * dy) ** (1.0 / pb.p))

    def density_norm(values: np.ndarray) -> float:
        return float((np.sum(np.abs(values) ** pb.p) * dx) ** (1.0 / pb.p))

    rng = np.random.default_rng(seed)
    results = []
    for _ in range(trials):
        f = rng.uniform(-1.0, 1.0, x_pts.shape[0])
        f2 = rng.uniform(-1.0, 1.0, x_pts.shape[0])
        operator_norm = image_norm(f)
        envelope = float(np.sum(np.abs(f) * tau) * dx)
        holder = density_norm(f) * tau_norm
        lip_lhs = image_norm(f - f2)
        lip_rhs = uniform_bound * density_norm(f - f2)
        ok = (
            operator_norm <= envelope + eps_quad + ROUNDOFF_SLACK * (1.0 + envelope)
            and envelope <= holder + eps_quad + ROUNDOFF_SLACK * (1.0 + holder)
            and lip_lhs <= lip_rhs + eps_quad + ROUNDOFF_SLACK * (1.0 + lip_rhs)
        )
        results.append(
            TrialBound(
                operator_norm=operator_norm,
                envelope_integral=envelope,
                holder_bound=holder,
                lipschitz_lhs=lip_lhs,
                lipschitz_rhs=lip_rhs,
                passed=ok,
            )
        )
    return OperatorBoundReport(
        kernel=which,
        p=pb.p,
        q=pb.q,
        quad_resolution=quad_resolution,
        tau_norm=tau_norm,
        uniform_bound=uniform_bound,
        refinement_delta=delta_fine,
        refinement_ratio=ratio,
        eps_quad=eps_quad,
        trials=tuple(results),
        notes=tuple(notes),
    )


def _tables(
    pb: LpDensityProblem,
    x_resolution: int,
    y_resolution: int | None,
    z_resolution: int | None,
):
    """Midpoint grids, weights, kernel tables, and bound/objective samples."""
    x_pts, dx = midpoint_grid(pb.domain, x_resolution)
    c = evaluate_many(pb.objective, x_pts)
    n_x = x_pts.shape[0]
    if pb.has_inequalities:
        y_pts, dy = midpoint_grid(pb.ineq_domain, y_resolution or x_resolution)
        a_tab = _kernel_table(pb.kernel_a, y_pts, x_pts)
        a_vals = evaluate_many(pb.bound_a, y_pts)
    else:
        dy = 0.0
        a_tab = np.zeros((0, n_x))
        a_vals = np.zeros(0)
    if pb.has_equalities:
        z_pts, dz = midpoint_grid(pb.eq_domain, z_resolution or x_resolution)
        b_tab = _kernel_table(pb.kernel_b, z_pts, x_pts)
        b_vals = evaluate_many(pb.bound_b, z_pts)
    else:
        dz = 0.0
        b_tab = np.zeros((0, n_x))
        b_vals = np.zeros(0)
    return x_pts, dx, c, a_tab, a_vals, dy, b_tab, b_vals, dz


def discretize_lp_density(
    pb: LpDensityProblem,
    x_resolution: int,
    y_resolution: int | None = None,
    z_resolution: int | None = None,
) -> tuple[FiniteLP, FiniteLP]:
    """Collocate the density problem into an exact primal/dual LP pair.

    The primal variables are the density's cell values ``f_i ≥ 0`` on the
    domain midpoint grid; constraints are collocated at the midpoints of the
    inequality and equality boxes.  The dual variables are a nonnegative cell
    density ``g`` on the inequality grid and a free cell density ``s`` on the
    equality grid, with one ``≥ c(x_i)`` row per domain midpoint.  The two
    LPs differ from an exact transpose pair only by the positive cell-volume
    rescaling of the dual variables, so their optimal values coincide to
    solver accuracy at every resolution.
    """
    for label, value in (
        ("x_resolution", x_resolution),
        ("y_resolution", y_resolution),
        ("z_resolution", z_resolution),
    ):
        if value is not None and value < 2:
            raise ValueError(f"{label} must be >= 2, got {value}")
    x_pts, dx, c, a_tab, a_vals, dy, b_tab, b_vals, dz = _tables(
        pb, x_resolution, y_resolution, z_resolution
    )
    n_x = x_pts.shape[0]
    n_y, n_z = a_tab.shape[0], b_tab.shape[0]

    primal = make_lp(
        sense="max",
        objective=c * dx,
        rows=np.vstack([a_tab * dx, b_tab * dx]),
        row_senses=("<=",) * n_y + ("=",) * n_z,
        rhs=np.concatenate([a_vals, b_vals]),
        lower=0.0,
        upper=np.inf,
    )
    dual = FiniteLP(
        sense="min",
        objective=np.concatenate([a_vals * dy, b_vals * dz]),
        rows=np.hstack([a_tab.T * dy, b_tab.T * dz]),
        row_senses=(">=",) * n_x,
        rhs=c,
        lower=np.concatenate([np.zeros(n_y), np.full(n_z, -np.inf)]),
        upper=np.full(n_y + n_z, np.inf),
    )
    return primal, dual


@dataclass(frozen=True)
class CollocationReport:
    """Primal/dual collocation values at one resolution, plus refinement."""

    status: ReportStatus
    primal_value: float | None
    dual_value: float | None
    gap: float | None
    x_resolution: int
    y_resolution: int
    z_resolution: int
    refined_primal_value: float | None
    notes: tuple[str, ...]


def collocation_report(
    pb: LpDensityProblem,
    x_resolution: int = 64,
    y_resolution: int | None = None,
    z_resolution: int | None = None,
    gap_rtol: float = 1e-3,
    refine: bool = True,
) -> CollocationReport:
    """Solve the collocation pair and label the outcome.

    When refining the domain grid keeps pushing the value up by more than
    ``gap_rtol``-relative, the supremum is being approached by densities that
    pile mass into ever-smaller cells, and no limiting density exists; the
    report then carries the note "value approached, optimizer escapes the
    density class".
    """
    y_res = y_resolution or x_resolution
    z_res = z_resolution or x_resolution
    primal, dual = discretize_lp_density(pb, x_resolution, y_res, z_res)
    p_out = solve_lp(primal)
    d_out = solve_lp(dual)
    notes: list[str] = []

    if p_out.status == LPStatus.INFEASIBLE:
        return CollocationReport(
            status=ReportStatus.PRIMAL_INFEASIBLE,
            primal_value=None,
            dual_value=d_out.value if d_out.status == LPStatus.OPTIMAL else None,
            gap=None,
            x_resolution=x_resolution,
            y_resolution=y_res,
            z_resolution=z_res,
            refined_primal_value=None,
            notes=("collocated primal has no nonnegative density",),
        )
    if p_out.status == LPStatus.UNBOUNDED or d_out.status == LPStatus.INFEASIBLE:
        return CollocationReport(
            status=ReportStatus.NOT_CONVERGED,
            primal_value=None,
            dual_value=None,
            gap=None,
            x_resolution=x_resolution,
            y_resolution=y_res,
            z_resolution=z_res,
            refined_primal_value=None,
            notes=("collocated primal is unbounded above; dual infeasible",),
        )
    if d_out.status == LPStatus.UNBOUNDED:
        return CollocationReport(
            status=ReportStatus.DUAL_UNBOUNDED,
            primal_value=p_out.value,
            dual_value=None,
            gap=None,
            x_resolution=x_resolution,
            y_resolution=y_res,
            z_resolution=z_res,
            refined_primal_value=None,
            notes=("collocated dual is unbounded below",),
        )

    gap = d_out.value - p_out.value
    status = ReportStatus.STRONG_DUALITY
    if abs(gap) > gap_rtol * (1.0 + abs(d_out.value)):
        status = ReportStatus.GAP_REMAINS

    refined_value = None
    if refine:
        refined, _ = discretize_lp_density(pb, 2 * x_resolution, y_res, z_res)
        r_out = solve_lp(refined)
        if r_out.status == LPStatus.OPTIMAL:
            refined_value = r_out.value
            if refined_value - p_out.value > gap_rtol * (1.0 + abs(refined_value)):
                notes.append("value approached, optimizer escapes the density class")
    return CollocationReport(
        status=status,
        primal_value=p_out.value,
        dual_value=d_out.value,
        gap=gap,
        x_resolution=x_resolution,
        y_resolution=y_res,
        z_resolution=z_res,
        refined_primal_value=refined_value,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class DensitySlaterReport:
    """Strict-feasibility margin for the collocated density problem."""

    margin: float
    feasible: bool
    capped: bool
    equality_rank: int
    n_equality_rows: int

    @property
    def rank_deficient(self) -> bool:
        return self.equality_rank < self.n_equality_rows


def check_lp_slater(
    pb: LpDensityProblem,
    x_resolution: int = 33,
    y_resolution: int | None = None,
    z_resolution: int | None = None,
    cap: float = SLATER_CAP,
) -> DensitySlaterReport:
    """Maximize the margin delta with f_i ≥ delta and delta of slack per row.

    Solves ``max delta`` subject to ``sum_i A(y_j, x_i) f_i dx + delta ≤
    a(y_j)``, ``sum_i B(z_l, x_i) f_i dx = b(z_l)``, and ``f_i ≥ delta``.  A
    positive margin exhibits a strictly positive density satisfying every
    inequality strictly; an infeasible margin LP reports ``-inf``.  The rank
    of the collocated equality matrix is reported as a finite surrogate for
    surjectivity of the equality operator, so duplicated or dependent
    equality rows show up as a rank deficit.
    """
    x_pts, dx, _, a_tab, a_vals, _, b_tab, b_vals, _ = _tables(
        pb, x_resolution, y_resolution, z_resolution
    )
    n_x = x_pts.shape[0]
    n_y, n_z = a_tab.shape[0], b_tab.shape[0]
    rank = int(np.linalg.matrix_rank(b_tab)) if n_z else 0

    rows = np.zeros((n_y + n_z + n_x, n_x + 1))
    rows[:n_y, :n_x] = a_tab * dx
    rows[:n_y, n_x] = 1.0
    rows[n_y : n_y + n_z, :n_x] = b_tab * dx
    rows[n_y + n_z :, :n_x] = np.eye(n_x)
    rows[n_y + n_z :, n_x] = -1.0
    objective = np.zeros(n_x + 1)
    objective[n_x] = 1.0
    lp = FiniteLP(
        sense="max",
        objective=objective,
        rows=rows,
        row_senses=("<=",) * n_y + ("=",) * n_z + (">=",) * n_x,
        rhs=np.concatenate([a_vals, b_vals, np.zeros(n_x)]),
        lower=np.full(n_x + 1, -np.inf),
        upper=np.concatenate([np.full(n_x, np.inf), [cap]]),
    )
    out = solve_lp(lp)
    if out.status == LPStatus.INFEASIBLE:
        return DensitySlaterReport(
            margin=-math.inf,
            feasible=False,
            capped=False,
            equality_rank=rank,
            n_equality_rows=n_z,
        )
    if out.status != LPStatus.OPTIMAL:
        raise RuntimeError(f"margin LP ended {out.status} despite the cap {cap:g}")
    margin = float(out.x[n_x])
    return DensitySlaterReport(
        margin=margin,
        feasible=True,
        capped=margin >= cap * (1.0 - 1e-6),
        equality_rank=rank,
        n_equality_rows=n_z,
    )
