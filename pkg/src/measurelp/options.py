"""Model-free payoff bounds from a forward and vanilla call quotes.

Given a spot interval, a forward price, and optionally a set of call quotes
(strike, price), any pricing measure must be a probability distribution on
the interval with the given mean that reprices every quote.  The tightest
upper (or lower) bound on another payoff consistent with those facts is a
moment problem: maximize (or minimize) the expected payoff over all such
distributions.  This module builds that problem and extracts the certified
bound from its dual side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .expressions import Binary, Call, Expression, Literal, Negate, Variable, parse_expression
from .geometry import Box, Partition
from .moment import DualityReport, MomentProblem, PiecewiseFunction, SolverConfig, duality_report

DIRECTIONS = ("sup", "inf")


def _as_payoff(payoff) -> Expression:
    if isinstance(payoff, Expression):
        if payoff.arity != 1:
            raise ValueError(f"payoff must have arity 1, got {payoff.arity}")
        return payoff
    return parse_expression(str(payoff), 1, ("x",))


def _call_payoff(strike: float) -> Expression:
    spot = Variable(0, "x1")
    moneyness = Binary("-", spot, Literal(float(strike)))
    return Expression(Call("max", (moneyness, Literal(0.0))), 1)


def build_option_bound_problem(
    spot_domain: Sequence[float],
    forward: float,
    vanilla_quotes: Sequence[tuple[float, float]] = (),
    payoff="max(x1 - 1, 0)",
    direction: str = "sup",
) -> MomentProblem:
    """Moment problem whose value is the requested bound on the payoff price.

    Constraints are equalities: total mass 1, mean equal to the forward, and
    one call-price constraint per quote.  ``direction="inf"`` negates the
    payoff so the problem is always a sup problem; callers negate the value
    back (``solve_option_bound`` does both steps).  Inconsistent quotes are
    not pre-checked; they surface as primal infeasibility when solving.
    """
    lo, hi = (float(v) for v in spot_domain)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"spot domain must be a finite interval, got [{lo}, {hi}]")
    forward = float(forward)
    if not forward > 0.0:
        raise ValueError(f"forward must be positive, got {forward}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    hull = Box((lo,), (hi,))
    partition = Partition((hull,))

    def pw(e: Expression) -> PiecewiseFunction:
        return PiecewiseFunction(partition, (e,))

    target = _as_payoff(payoff)
    if direction == "inf":
        target = Expression(Negate(target.root), 1)

    equalities = [
        (pw(parse_expression("1", 1, ("x",))), 1.0),
        (pw(parse_expression("x1", 1, ("x",))), forward),
    ]
    for strike, price in vanilla_quotes:
        strike, price = float(strike), float(price)
        if not lo < strike < hi:
            raise ValueError(
                f"strike {strike} must lie inside the spot domain ({lo}, {hi})"
            )
        equalities.append((pw(_call_payoff(strike)), price))

    return MomentProblem(
        domain=partition,
        hull=hull,
        objective=pw(target),
        inequalities=(),
        equalities=tuple(equalities),
        name=f"option-bound-{direction}",
    )


@dataclass(frozen=True)
class OptionBound:
    """A certified payoff-price bound with the full solve report behind it.

    ``bound`` comes from the dual side, so it bounds the price for *every*
    consistent distribution; ``attained`` is the value of the best atomic
    distribution found, which approaches ``bound`` when the gap closes.
    """

    direction: str
    bound: float | None
    attained: float | None
    report: DualityReport
    problem: MomentProblem


def solve_option_bound(
    spot_domain: Sequence[float],
    forward: float,
    vanilla_quotes: Sequence[tuple[float, float]] = (),
    payoff="max(x1 - 1, 0)",
    direction: str = "sup",
    config: SolverConfig | None = None,
) -> OptionBound:
    """Build and solve the bound problem, negating values back for ``inf``."""
    mp = build_option_bound_problem(spot_domain, forward, vanilla_quotes, payoff, direction)
    report = duality_report(mp, config)
    sign = -1.0 if direction == "inf" else 1.0
    bound = None if report.dual_value is None else sign * report.dual_value
    attained = None if report.primal_value is None else sign * report.primal_value
    return OptionBound(
        direction=direction,
        bound=bound,
        attained=attained,
        report=report,
        problem=mp,
    )
