"""Generalized moment problems over box partitions, solved from both sides.

A problem asks for  sup ∫ h dF  over nonnegative measures F on a partitioned
domain, subject to  ∫ φ_s dF <= a_s  and  ∫ ψ_t dF = b_t.  Two routes:

* primal: restrict F to atoms on a tensor grid (closed-box sampling, each
  box evaluated with its own piece) and solve the resulting finite LP; this
  bounds the supremum from below.
* dual: find multipliers (y >= 0, z) with  Σ y_s φ_s + Σ z_t ψ_t >= h
  pointwise; the value  a.y + b.z  bounds the supremum from above.  The
  pointwise constraint is handled by an exchange method: solve a master LP
  over a working set of points, scan the boxes for the worst violation,
  add it as a cut, repeat.

Weak duality (primal value <= dual value) is checked on every report; a
violation beyond LP tolerances raises WeakDualityError because it can only
mean a solver bug.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .expressions import (
    Binary,
    Expression,
    Literal,
    Variable,
    evaluate,
    evaluate_many,
    free_variables,
    substitute_variables,
)
from .geometry import Box, Partition, grid_array
from .simplex import FiniteLP, LPOutcome, LPStatus, make_lp, solve_lp

DUAL_FEAS_CLIP = 1e-7  # y from LP duals may dip this far below 0 before we complain
ATOM_WEIGHT_FLOOR = 1e-12
SLATER_CAP = 1e6
MULTIPLIER_CAP = 1e8  # keeps the restricted dual bounded while cuts are scarce
WEAK_DUALITY_RTOL = 1e-8


class WeakDualityError(RuntimeError):
    """Primal value exceeded dual value beyond LP tolerances: a solver bug."""


class ExchangeError(RuntimeError):
    """The restricted dual was infeasible (primal unbounded on the cut set)."""


@dataclass(frozen=True)
class PiecewiseFunction:
    """One expression per partition box; evaluated with closure semantics.

    Points on a shared face take the value of the box whose piece is asked
    for, so the function may jump across box boundaries.
    """

    partition: Partition
    pieces: tuple[Expression, ...]

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if len(pieces) != len(self.partition.boxes):
            raise ValueError(
                f"{len(self.partition.boxes)} boxes but {len(pieces)} pieces"
            )
        for i, e in enumerate(pieces):
            if e.arity != self.partition.dim:
                raise ValueError(
                    f"piece {i} has arity {e.arity}, partition dimension is "
                    f"{self.partition.dim}"
                )

    def value_at(self, x: Sequence[float], box_index: int | None = None) -> float:
        if box_index is None:
            box_index = self.partition.locate_closure(x)
            if box_index is None:
                raise ValueError(f"point {tuple(x)} lies outside the partition")
        return evaluate(self.pieces[box_index], x)

    def values_on(self, box_index: int, points: np.ndarray) -> np.ndarray:
        return evaluate_many(self.pieces[box_index], points)

    def is_constant_one(self) -> bool:
        """True when every piece is the constant 1 (a total-mass integrand)."""
        for i, e in enumerate(self.pieces):
            if free_variables(e):
                return False
            if evaluate(e, self.partition.boxes[i].center()) != 1.0:
                return False
        return True


@dataclass(frozen=True)
class MomentProblem:
    """sup ∫ h dF  s.t.  ∫ φ_s dF <= a_s,  ∫ ψ_t dF = b_t,  F >= 0 on the domain."""

    domain: Partition
    hull: Box
    objective: PiecewiseFunction
    inequalities: tuple[tuple[PiecewiseFunction, float], ...]
    equalities: tuple[tuple[PiecewiseFunction, float], ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        if self.domain.dim != self.hull.dim:
            raise ValueError("domain and hull dimensions differ")
        if not self.inequalities and not self.equalities:
            raise ValueError("need at least one moment constraint")
        for fn in self._functions():
            if fn.partition is not self.domain and fn.partition != self.domain:
                raise ValueError("all functions must share the problem's partition")
        for _, bound in self.inequalities + self.equalities:
            if not math.isfinite(bound):
                raise ValueError("moment bounds must be finite")

    def _functions(self):
        yield self.objective
        for fn, _ in self.inequalities:
            yield fn
        for fn, _ in self.equalities:
            yield fn

    @property
    def n_ineq(self) -> int:
        return len(self.inequalities)

    @property
    def n_eq(self) -> int:
        return len(self.equalities)

    def has_mass_bound(self) -> bool:
        """Whether some constraint integrates the constant 1 (bounds total mass)."""
        return any(
            fn.is_constant_one() for fn, _ in self.inequalities + self.equalities
        )


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many weighted atoms; box_indices name the boxes that own them."""

    points: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]
    box_indices: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.points) == len(self.weights) == len(self.box_indices)):
            raise ValueError("points, weights, box_indices must have equal length")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("atom weights must be nonnegative")

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights))

    def integrate(self, fn: PiecewiseFunction) -> float:
        return float(
            sum(
                w * fn.value_at(p, box_index=i)
                for p, w, i in zip(self.points, self.weights, self.box_indices)
            )
        )


@dataclass(frozen=True)
class DualPoint:
    """Multipliers (y for inequalities, y >= 0; z for equalities, free)."""

    y: tuple[float, ...]
    z: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))
        if any(v < 0.0 for v in self.y):
            raise ValueError("inequality multipliers must be nonnegative")

    def value(self, mp: MomentProblem) -> float:
        a = [bound for _, bound in mp.inequalities]
        b = [bound for _, bound in mp.equalities]
        return float(np.dot(self.y, a) + np.dot(self.z, b))

    def slack_at(self, mp: MomentProblem, x: Sequence[float], box_index: int) -> float:
        """Σ y φ(x) + Σ z ψ(x) - h(x), evaluated with box ``box_index``'s pieces."""
        s = -mp.objective.value_at(x, box_index)
        for ys, (fn, _) in zip(self.y, mp.inequalities):
            s += ys * fn.value_at(x, box_index)
        for zt, (fn, _) in zip(self.z, mp.equalities):
            s += zt * fn.value_at(x, box_index)
        return s


def _clip_duals(raw: np.ndarray, count: int) -> np.ndarray:
    y = np.asarray(raw[:count], dtype=float)
    if y.size and float(y.min()) < -DUAL_FEAS_CLIP:
        raise WeakDualityError(
            f"inequality dual dipped to {float(y.min())}, beyond LP tolerance"
        )
    return np.maximum(y, 0.0)


# ---------------------------------------------------------------------------
# grid-discretised primal


@dataclass
class GridPrimal:
    """Finite LP over atom weights at fixed grid points, plus the grid itself."""

    lp: FiniteLP
    points: np.ndarray       # (G, dim)
    box_indices: np.ndarray  # (G,)


def assemble_grid_primal(mp: MomentProblem, resolution) -> GridPrimal:
    """LP over atom weights on the closed-box tensor grids of every box.

    Variables are atom weights w_g >= 0; rows are the M inequality moments
    (<= a) followed by the N equality moments (= b); the objective is
    max Σ h(x_g) w_g.
    """
    blocks = []
    boxes = []
    for i, box in enumerate(mp.domain.boxes):
        pts = grid_array(box, resolution)
        blocks.append(pts)
        boxes.append(np.full(len(pts), i))
    points = np.vstack(blocks)
    box_idx = np.concatenate(boxes)

    def row_for(fn: PiecewiseFunction) -> np.ndarray:
        vals = [fn.values_on(i, blocks[i]) for i in range(len(blocks))]
        return np.concatenate(vals)

    h = row_for(mp.objective)
    rows = [row_for(fn) for fn, _ in mp.inequalities]
    rows += [row_for(fn) for fn, _ in mp.equalities]
    rhs = [bound for _, bound in mp.inequalities] + [bound for _, bound in mp.equalities]
    A = np.vstack(rows) if rows else np.zeros((0, len(points)))
    for name, arr in (("objective", h), ("constraints", A)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} produced non-finite values on the grid")
    senses = ("<=",) * mp.n_ineq + ("=",) * mp.n_eq
    lp = make_lp("max", h, A, senses, rhs)
    return GridPrimal(lp=lp, points=points, box_indices=box_idx)


@dataclass
class PrimalSolve:
    status: LPStatus
    value: float | None
    measure: AtomicMeasure | None
    outcome: LPOutcome
    grid: GridPrimal


def solve_grid_primal(mp: MomentProblem, resolution) -> PrimalSolve:
    grid = assemble_grid_primal(mp, resolution)
    out = solve_lp(grid.lp)
    if out.status != LPStatus.OPTIMAL:
        return PrimalSolve(out.status, None, None, out, grid)
    keep = np.flatnonzero(out.x > ATOM_WEIGHT_FLOOR)
    measure = AtomicMeasure(
        points=tuple(tuple(float(v) for v in grid.points[g]) for g in keep),
        weights=tuple(float(out.x[g]) for g in keep),
        box_indices=tuple(int(grid.box_indices[g]) for g in keep),
    )
    return PrimalSolve(out.status, float(out.value), measure, out, grid)


# ---------------------------------------------------------------------------
# exchange dual


@dataclass(frozen=True)
class Cut:
    """One pointwise dual constraint Σ y φ(x) + Σ z ψ(x) >= h(x)."""

    box_index: int
    point: tuple[float, ...]
    phi: tuple[float, ...]
    psi: tuple[float, ...]
    h: float


def make_cut(mp: MomentProblem, box_index: int, point: Sequence[float]) -> Cut:
    pt = tuple(float(v) for v in point)
    if not mp.domain.boxes[box_index].closure_contains(pt, tol=1e-9):
        raise ValueError(f"point {pt} is not in the closure of box {box_index}")
    return Cut(
        box_index=box_index,
        point=pt,
        phi=tuple(fn.value_at(pt, box_index) for fn, _ in mp.inequalities),
        psi=tuple(fn.value_at(pt, box_index) for fn, _ in mp.equalities),
        h=mp.objective.value_at(pt, box_index),
    )


def initial_cuts(mp: MomentProblem) -> list[Cut]:
    """Corners and center of every box (closed-box corners)."""
    cuts = []
    for i, box in enumerate(mp.domain.boxes):
        for p in box.corners() + [box.center()]:
            cuts.append(make_cut(mp, i, p))
    return cuts


def restricted_dual_lp(
    mp: MomentProblem, cuts: Sequence[Cut], cap: float | None = None
) -> FiniteLP:
    """The (y, z)-variable form: min a.y + b.z s.t. one >= row per cut.

    ``cap`` bounds every multiplier's magnitude; the exchange loop uses it to
    keep this LP bounded while the working cut set is still too small.
    """
    M, N = mp.n_ineq, mp.n_eq
    A = np.empty((len(cuts), M + N))
    rhs = np.empty(len(cuts))
    for r, cut in enumerate(cuts):
        A[r, :M] = cut.phi
        A[r, M:] = cut.psi
        rhs[r] = cut.h
    obj = np.array(
        [bound for _, bound in mp.inequalities] + [bound for _, bound in mp.equalities]
    )
    lower = np.concatenate([np.zeros(M), np.full(N, -np.inf if cap is None else -cap)])
    upper = np.inf if cap is None else cap
    return make_lp("min", obj, A, (">=",) * len(cuts), rhs, lower=lower, upper=upper)


def _solve_master(mp: MomentProblem, cuts: Sequence[Cut], elastic: float | None = None):
    """Solve the cut-supported primal; its row duals are the restricted dual.

    Returns (status, value, DualPoint | None).  Columns are cuts, rows are
    the M + N moment constraints, so the tableau stays small however many
    cuts tests seed.  With ``elastic``, extra columns that buy one unit of
    constraint defect at that price make the LP feasible for any right-hand
    side; by LP duality the row duals are then the optimum of the restricted
    dual with every multiplier capped at the elastic price.
    """
    M, N = mp.n_ineq, mp.n_eq
    C = len(cuts)
    H = np.array([c.h for c in cuts])
    A = np.empty((M + N, C))
    for j, cut in enumerate(cuts):
        A[:M, j] = cut.phi
        A[M:, j] = cut.psi
    if elastic is not None:
        defect = np.zeros((M + N, M + 2 * N))
        defect[:M, :M] = -np.eye(M)
        defect[M:, M : M + N] = np.eye(N)
        defect[M:, M + N :] = -np.eye(N)
        A = np.hstack([A, defect])
        H = np.concatenate([H, np.full(M + 2 * N, -float(elastic))])
    rhs = [bound for _, bound in mp.inequalities] + [bound for _, bound in mp.equalities]
    lp = make_lp("max", H, A, ("<=",) * M + ("=",) * N, rhs)
    out = solve_lp(lp)
    if out.status != LPStatus.OPTIMAL:
        return out.status, None, None
    y = _clip_duals(out.duals, M)
    z = out.duals[M:]
    return LPStatus.OPTIMAL, float(out.value), DualPoint(y=tuple(y), z=tuple(z))


@dataclass(frozen=True)
class SeparationResult:
    box_index: int
    point: tuple[float, ...]
    slack: float


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, lo: float, hi: float, iters: int) -> tuple[float, float]:
    """Golden-section search; returns the best point actually evaluated."""
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    for _ in range(iters):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
            if fd < best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def _scan_axes(dim: int, scan_resolution) -> list[int] | int:
    if scan_resolution is not None:
        return scan_resolution
    # default budget of ~1024 scan points per box, spread across the axes
    return max(2, int(round(1024 ** (1.0 / dim))))


class _ScanOracle:
    """Separation oracle with the grid values cached across exchange iterations."""

    def __init__(self, mp: MomentProblem, scan_resolution, refine_steps: int):
        self.mp = mp
        self.refine_steps = refine_steps
        res = _scan_axes(mp.domain.dim, scan_resolution)
        self.points = []   # per box: (K, dim)
        self.tables = []   # per box: rows = M phi, N psi, then h; shape (M+N+1, K)
        self.steps = []    # per box: scan step per axis
        for i, box in enumerate(mp.domain.boxes):
            pts = grid_array(box, res)
            rows = [fn.values_on(i, pts) for fn, _ in mp.inequalities]
            rows += [fn.values_on(i, pts) for fn, _ in mp.equalities]
            rows.append(mp.objective.values_on(i, pts))
            table = np.vstack(rows)
            if not np.all(np.isfinite(table)):
                raise ValueError(f"non-finite function value while scanning box {i}")
            self.points.append(pts)
            self.tables.append(table)
            axes_res = res if not isinstance(res, int) else [res] * box.dim
            self.steps.append(
                [(u - l) / (r - 1) for l, u, r in zip(box.lower, box.upper, axes_res)]
            )

    def find(self, dual: DualPoint) -> SeparationResult:
        yz = np.concatenate([dual.y, dual.z])
        best = None
        for i in range(len(self.points)):
            table = self.tables[i]
            slack = yz @ table[:-1] - table[-1] if yz.size else -table[-1]
            g = int(np.argmin(slack))
            cand = (float(slack[g]), i, tuple(self.points[i][g]))
            if best is None or cand[0] < best[0]:
                best = cand
        slack0, box_index, point = best
        point, slack0 = self._refine(dual, box_index, list(point), slack0)
        return SeparationResult(box_index=box_index, point=tuple(point), slack=slack0)

    def _refine(self, dual, box_index, x, fbest):
        if self.refine_steps <= 0:
            return x, fbest
        box = self.mp.domain.boxes[box_index]
        for j in range(box.dim):
            lo = max(box.lower[j], x[j] - self.steps[box_index][j])
            hi = min(box.upper[j], x[j] + self.steps[box_index][j])
            if hi <= lo:
                continue

            def along(v, j=j):
                trial = list(x)
                trial[j] = v
                return dual.slack_at(self.mp, trial, box_index)

            xj, fj = _golden_min(along, lo, hi, self.refine_steps)
            if fj < fbest:
                x[j] = xj
                fbest = fj
        return x, fbest


def separation_oracle(
    mp: MomentProblem,
    dual: DualPoint,
    scan_resolution=None,
    refine_steps: int = 40,
) -> SeparationResult:
    """Most-violated point of the dual constraint: argmin of the slack.

    Scans a per-box tensor grid, then refines coordinate-wise with a
    golden-section search; the returned point is the best point actually
    evaluated, so it is never worse than the scan argmin.  slack < 0 means
    the dual point is infeasible at that point.
    """
    return _ScanOracle(mp, scan_resolution, refine_steps).find(dual)


@dataclass
class IterationRecord:
    value: float
    dual: DualPoint
    worst_point: tuple[float, ...]
    worst_box: int
    slack: float


@dataclass
class ExchangeResult:
    status: str  # "converged" | "not_converged" | "dual_unbounded"
    value: float | None
    dual: DualPoint | None
    cuts: list[Cut]
    iterations: int
    history: list[IterationRecord]
    final_slack: float | None


def exchange_solve(
    mp: MomentProblem,
    tol: float = 1e-6,
    max_iters: int = 200,
    scan_resolution=None,
    refine_steps: int = 40,
    extra_cuts: Sequence[tuple[int, Sequence[float]]] = (),
) -> ExchangeResult:
    """Exchange method for the dual: master LP on a working cut set + oracle.

    Starts from the corner and center cuts of every box (plus ``extra_cuts``
    given as (box_index, point) pairs) and stops when the worst slack is
    >= -tol.  Master values are nondecreasing because cuts only ever add
    columns to the cut-supported primal.

    An infeasible master means the restricted dual is unbounded below on the
    working set -- the dual value is -inf *so far*, so the primal is either
    infeasible or just needs more cuts.  Those iterations re-solve the
    restricted dual with multipliers capped at ``MULTIPLIER_CAP`` and
    separate against that minimizer: a violated point restores progress,
    while a capped minimizer that no point cuts off is a near-feasible dual
    direction with an enormously negative value, returned as
    "dual_unbounded".  An infeasible restricted dual (possible only when the
    primal is unbounded above) raises ExchangeError.
    """
    max_iters = max(1, int(max_iters))
    cuts = initial_cuts(mp)
    seen = {(c.box_index, c.point) for c in cuts}
    for box_index, point in extra_cuts:
        cut = make_cut(mp, int(box_index), point)
        if (cut.box_index, cut.point) not in seen:
            seen.add((cut.box_index, cut.point))
            cuts.append(cut)

    oracle = _ScanOracle(mp, scan_resolution, refine_steps)
    history: list[IterationRecord] = []
    for it in range(1, max_iters + 1):
        status, value, dual = _solve_master(mp, cuts)
        if status == LPStatus.UNBOUNDED:
            raise ExchangeError(
                "restricted dual infeasible: the primal is unbounded above "
                "on the working cut set"
            )
        recovering = status == LPStatus.INFEASIBLE
        if recovering:
            status, value, dual = _solve_master(mp, cuts, elastic=MULTIPLIER_CAP)
            if status != LPStatus.OPTIMAL:
                raise ExchangeError(
                    "restricted dual infeasible even with capped multipliers: "
                    "the primal is unbounded above on the working cut set"
                )
        sep = oracle.find(dual)
        history.append(
            IterationRecord(
                value=value, dual=dual, worst_point=sep.point,
                worst_box=sep.box_index, slack=sep.slack,
            )
        )
        if sep.slack >= -tol:
            return ExchangeResult(
                status="dual_unbounded" if recovering else "converged",
                value=None if recovering else value,
                dual=dual, cuts=cuts,
                iterations=it, history=history, final_slack=sep.slack,
            )
        cuts.append(make_cut(mp, sep.box_index, sep.point))
    return ExchangeResult(
        status="not_converged", value=value, dual=dual, cuts=cuts,
        iterations=max_iters, history=history, final_slack=sep.slack,
    )


# ---------------------------------------------------------------------------
# Slater condition checks


@dataclass
class DualSlaterReport:
    """Largest t with Σ y φ + Σ z ψ - h >= t everywhere (capped at 1e6)."""

    margin: float
    witness: DualPoint | None
    converged: bool
    capped: bool
    iterations: int


def check_dual_slater(
    mp: MomentProblem,
    tol: float = 1e-6,
    max_iters: int = 200,
    scan_resolution=None,
    refine_steps: int = 0,
    cap: float = SLATER_CAP,
) -> DualSlaterReport:
    """Maximize the uniform dual slack t over the scan mesh (exchange loop).

    The LP has variables (y >= 0, z, t <= cap) and one row per cut; the
    margin is certified against the scan points, so refinement is off by
    default.  Margin > 0 certifies the strict-positivity hypothesis on the
    mesh.  Whenever a constraint can lift the slack uniformly (any problem
    with a total-mass constraint), the margin is unbounded and reports the
    cap.

    A tiny penalty on the multiplier norm breaks the master's degeneracy:
    once t sits at the cap every feasible (y, z) is optimal, and without
    the penalty the vertex sequence wanders instead of settling on one
    certificate.  The reported margin is the t component, not the
    penalised objective.
    """
    M, N = mp.n_ineq, mp.n_eq
    eps = 1e-9  # lexicographic tie-break; shifts t* by at most eps * |(y, z)|_1
    cuts = initial_cuts(mp)
    oracle = _ScanOracle(mp, scan_resolution, refine_steps)
    # variables: y (M), z split into zp - zn (2N), then t
    width = M + 2 * N + 1
    obj = np.full(width, -eps)
    obj[-1] = 1.0
    lower = np.concatenate([np.zeros(M + 2 * N), [-np.inf]])
    upper = np.concatenate([np.full(M + 2 * N, np.inf), [cap]])
    witness = None
    margin = -math.inf
    for it in range(1, max_iters + 1):
        A = np.empty((len(cuts), width))
        rhs = np.empty(len(cuts))
        for r, cut in enumerate(cuts):
            A[r, :M] = cut.phi
            A[r, M:M + N] = cut.psi
            A[r, M + N:M + 2 * N] = [-v for v in cut.psi]
            A[r, -1] = -1.0
            rhs[r] = cut.h
        lp = make_lp("max", obj, A, (">=",) * len(cuts), rhs, lower=lower, upper=upper)
        out = solve_lp(lp)
        if out.status != LPStatus.OPTIMAL:
            raise WeakDualityError(f"slater master reported {out.status.value}")
        t = float(out.x[-1])
        y = _clip_duals(out.x, M)
        z = out.x[M:M + N] - out.x[M + N:M + 2 * N]
        witness = DualPoint(y=tuple(y), z=tuple(z))
        margin = t
        sep = oracle.find(witness)
        if sep.slack >= t - tol:
            capped = t >= cap * (1.0 - 1e-6)
            return DualSlaterReport(
                margin=margin, witness=witness, converged=True, capped=capped,
                iterations=it,
            )
        cuts.append(make_cut(mp, sep.box_index, sep.point))
    return DualSlaterReport(
        margin=margin, witness=witness, converged=False,
        capped=margin >= cap * (1.0 - 1e-6), iterations=max_iters,
    )


@dataclass
class PrimalSlaterReport:
    """Largest uniform inequality slack of a feasible grid measure (capped).

    ``margin`` is -inf when even the equalities cannot be met on the grid.
    ``equality_rank`` is the numerical rank of the equality moment rows on
    the grid; rank < n_equalities flags redundant or contradictory rows.
    """

    margin: float
    feasible: bool
    equality_rank: int
    n_equalities: int
    capped: bool

    @property
    def rank_deficient(self) -> bool:
        return self.equality_rank < self.n_equalities


def check_primal_slater(
    mp: MomentProblem, resolution=129, cap: float = SLATER_CAP
) -> PrimalSlaterReport:
    grid = assemble_grid_primal(mp, resolution)
    M, N = mp.n_ineq, mp.n_eq
    G = grid.lp.rows.shape[1]
    psi_rows = grid.lp.rows[M:, :]
    rank = int(np.linalg.matrix_rank(psi_rows)) if N else 0

    # maximize delta s.t. moments(w) + delta <= a (ineq rows), = b (eq rows)
    obj = np.zeros(G + 1)
    obj[-1] = 1.0
    A = np.zeros((M + N, G + 1))
    A[:, :G] = grid.lp.rows
    A[:M, -1] = 1.0
    lower = np.concatenate([np.zeros(G), [-np.inf]])
    upper = np.concatenate([np.full(G, np.inf), [cap]])
    lp = make_lp(
        "max", obj, A, grid.lp.row_senses, grid.lp.rhs, lower=lower, upper=upper
    )
    out = solve_lp(lp)
    if out.status == LPStatus.INFEASIBLE:
        return PrimalSlaterReport(
            margin=-math.inf, feasible=False, equality_rank=rank,
            n_equalities=N, capped=False,
        )
    if out.status != LPStatus.OPTIMAL:
        raise WeakDualityError(f"primal slater LP reported {out.status.value}")
    margin = float(out.value)
    return PrimalSlaterReport(
        margin=margin, feasible=True, equality_rank=rank, n_equalities=N,
        capped=margin >= cap * (1.0 - 1e-9),
    )


# ---------------------------------------------------------------------------
# the full report


class ReportStatus(str, Enum):
    STRONG_DUALITY = "strong_duality_numerically"
    GAP_REMAINS = "gap_remains"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_UNBOUNDED = "dual_unbounded_below"
    NOT_CONVERGED = "not_converged"


@dataclass(frozen=True)
class SolverConfig:
    grid_resolution: int | tuple[int, ...] = 1025
    tol: float = 1e-6
    max_iters: int = 200
    scan_resolution: int | tuple[int, ...] | None = None
    refine_steps: int = 40
    gap_rtol: float = 1e-3
    verification_factor: int = 4
    slater_resolution: int = 129


@dataclass
class DualityReport:
    status: ReportStatus
    primal_value: float | None
    dual_value: float | None
    gap: float | None
    max_dual_violation: float | None
    iterations: int
    atoms: AtomicMeasure | None
    dual: DualPoint | None
    primal_slater: PrimalSlaterReport
    dual_slater: DualSlaterReport
    has_mass_bound: bool
    notes: tuple[str, ...]


def _verification_scan(mp, dual, config) -> float:
    """Max violation of the dual constraint on a mesh finer than the oracle's."""
    res = _scan_axes(mp.domain.dim, config.scan_resolution)
    factor = config.verification_factor
    if isinstance(res, int):
        fine = factor * res
    else:
        fine = tuple(factor * r for r in res)
    sep = separation_oracle(mp, dual, fine, config.refine_steps)
    return max(0.0, -sep.slack)


def duality_report(mp: MomentProblem, config: SolverConfig | None = None) -> DualityReport:
    """Solve both routes, certify weak duality, and check both Slater conditions.

    The primal grid points are seeded into the exchange cut set, so every
    master value dominates the grid value by LP duality and the weak-duality
    ordering holds structurally, not just numerically.  Raises
    WeakDualityError if, despite that, a converged dual lands more than
    1e-8 * (1 + |dual|) below an optimal grid primal: that ordering can only
    fail through a solver bug.
    """
    config = config or SolverConfig()
    notes: list[str] = []

    primal = solve_grid_primal(mp, config.grid_resolution)
    seeds = tuple(
        (int(i), tuple(p))
        for i, p in zip(primal.grid.box_indices, primal.grid.points)
    )
    ex = exchange_solve(
        mp,
        tol=config.tol,
        max_iters=config.max_iters,
        scan_resolution=config.scan_resolution,
        refine_steps=config.refine_steps,
        extra_cuts=seeds,
    )
    primal_slater = check_primal_slater(mp, config.slater_resolution)
    dual_slater = check_dual_slater(
        mp,
        tol=config.tol,
        max_iters=config.max_iters,
        scan_resolution=config.scan_resolution,
        refine_steps=config.refine_steps,
    )

    has_mass = mp.has_mass_bound()
    if not has_mass:
        notes.append(
            "no total-mass constraint: a dual tolerance of tol does not convert "
            "into a bound on the optimal value"
        )
    if primal_slater.capped or dual_slater.capped:
        notes.append(f"slater margin hit the reporting cap {SLATER_CAP:g}")

    max_violation = None
    if ex.dual is not None:
        max_violation = _verification_scan(mp, ex.dual, config)

    gap = None
    if primal.value is not None and ex.value is not None:
        gap = ex.value - primal.value
        if ex.status == "converged" and gap < -WEAK_DUALITY_RTOL * (1.0 + abs(ex.value)):
            raise WeakDualityError(
                f"weak duality violated: primal {primal.value!r} > dual {ex.value!r}"
            )

    if primal.status == LPStatus.INFEASIBLE:
        status = ReportStatus.PRIMAL_INFEASIBLE
    elif ex.status == "dual_unbounded":
        status = ReportStatus.DUAL_UNBOUNDED
    elif primal.status == LPStatus.UNBOUNDED:
        status = ReportStatus.NOT_CONVERGED
        notes.append("grid primal unbounded above; no finite dual certificate")
    elif ex.status == "not_converged":
        status = ReportStatus.NOT_CONVERGED
    elif gap is not None and gap <= config.gap_rtol * (1.0 + abs(ex.value)):
        status = ReportStatus.STRONG_DUALITY
    else:
        status = ReportStatus.GAP_REMAINS

    return DualityReport(
        status=status,
        primal_value=primal.value,
        dual_value=ex.value,
        gap=gap,
        max_dual_violation=max_violation,
        iterations=ex.iterations,
        atoms=primal.measure,
        dual=ex.dual,
        primal_slater=primal_slater,
        dual_slater=dual_slater,
        has_mass_bound=has_mass,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# unit-box normalisation


def apply_unit_normalization(mp: MomentProblem) -> MomentProblem:
    """Affinely relocate each box to a disjoint translated unit box.

    Box i becomes [i, i+1) x [0, 1)^(dim-1); every expression is composed
    with the inverse affine map, so integrals of the relocated problem agree
    with the original ones measure-for-measure.
    """
    dim = mp.domain.dim
    new_boxes = []
    replacements_per_box = []
    for i, box in enumerate(mp.domain.boxes):
        offset = [float(i)] + [0.0] * (dim - 1)
        lower = tuple(offset)
        upper = tuple(o + 1.0 for o in offset)
        new_boxes.append(Box(lower=lower, upper=upper))
        repl = []
        for j in range(dim):
            scale = box.upper[j] - box.lower[j]
            shift = box.lower[j] - scale * offset[j]
            # x_orig_j = shift + scale * u_j
            repl.append(
                Binary(
                    "+",
                    Literal(shift),
                    Binary("*", Literal(scale), Variable(j, f"x{j + 1}")),
                )
            )
        replacements_per_box.append(repl)

    partition = Partition(boxes=tuple(new_boxes))
    hull = Box(
        lower=(0.0,) * dim,
        upper=(float(len(new_boxes)),) + (1.0,) * (dim - 1),
    )

    def transform(fn: PiecewiseFunction) -> PiecewiseFunction:
        pieces = tuple(
            substitute_variables(piece, replacements_per_box[i], dim)
            for i, piece in enumerate(fn.pieces)
        )
        return PiecewiseFunction(partition=partition, pieces=pieces)

    return MomentProblem(
        domain=partition,
        hull=hull,
        objective=transform(mp.objective),
        inequalities=tuple((transform(fn), b) for fn, b in mp.inequalities),
        equalities=tuple((transform(fn), b) for fn, b in mp.equalities),
        name=f"{mp.name}-unit" if mp.name else "unit",
    )
