"""Discrete-time price adjustment driven by a sequence of one-period games.

Each period the selected equilibrium is played and every region applies at
most one rule:

* downward, when supply is left unsold: ``p_new q = p q_cons``;
* upward, when consumers keep unspent income: ``p_new q = Y_res``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import PreconditionViolated
from .equilibrium import EquilibriumResult, solve_nash
from .model import EPS, ModelParams, PriceState
from .zones import line_values


class Direction(enum.Enum):
    Up = "up"
    Down = "down"


class Rule(enum.Enum):
    PriceDown = "price-down"
    PriceUp = "price-up"


@dataclass(frozen=True)
class AdjustmentEvent:
    region: int
    direction: Direction
    old_price: float
    new_price: float
    rule: Rule

    def __str__(self):
        return f"p{self.region} {self.direction.value} {self.old_price:.6g}->{self.new_price:.6g}"


class SteadyKind(enum.Enum):
    TypeE = "TypeE"
    L3 = "L3"
    L4 = "L4"
    DegenerateL1 = "DegenerateL1"
    DegenerateL2 = "DegenerateL2"
    DegenerateL3 = "DegenerateL3"
    DegenerateL4 = "DegenerateL4"
    Unresolved = "Unresolved"


@dataclass(frozen=True)
class SteadyStateClass:
    """Terminal behaviour of a trajectory.

    ``limit`` carries the analytic limit price for the degenerate classes
    (``p1_inf`` for L1, ``p2_inf`` for L2, ``k`` for L3/L4); ``max_steps``
    is set only for :attr:`SteadyKind.Unresolved`.
    """

    kind: SteadyKind
    limit: float | None = None
    max_steps: int | None = None

    def __str__(self):
        if self.limit is not None:
            return f"{self.kind.value}{{{self.limit:.10g}}}"
        if self.max_steps is not None:
            return f"{self.kind.value}{{{self.max_steps}}}"
        return self.kind.value


@dataclass(frozen=True)
class StepRecord:
    """State at step ``t``: prices, the equilibrium played, and the events that lead to ``t+1``."""

    t: int
    prices: PriceState
    equilibrium: EquilibriumResult
    events: tuple[AdjustmentEvent, ...]


@dataclass
class Trajectory:
    records: list[StepRecord] = field(default_factory=list)
    classification: SteadyStateClass = SteadyStateClass(SteadyKind.Unresolved)
    converged_at: int | None = None

    @property
    def final_prices(self) -> PriceState:
        return self.records[-1].prices

    def p1_series(self) -> list[float]:
        return [r.prices.p1 for r in self.records]

    def p2_series(self) -> list[float]:
        return [r.prices.p2 for r in self.records]


def _adjust(region: int, p: float, q: float, q_cons: float, y_res: float
            ) -> tuple[float, AdjustmentEvent | None]:
    down = q_cons < q - EPS
    up = y_res > p * q + EPS
    # at a selected equilibrium a region is never both undersold and over-resourced
    assert not (down and up), f"region {region} fires both rules"
    if down:
        new = 0.0 if q_cons <= EPS else p * q_cons / q
        return new, AdjustmentEvent(region, Direction.Down, p, new, Rule.PriceDown)
    if up:
        new = y_res / q
        return new, AdjustmentEvent(region, Direction.Up, p, new, Rule.PriceUp)
    return p, None


def step(prices: PriceState, params: ModelParams
         ) -> tuple[PriceState, EquilibriumResult, tuple[AdjustmentEvent, ...]]:
    """Play one period and return the next prices, the equilibrium and the events.

    >>> new, _, _ = step(PriceState(1, 1), ModelParams(4, 6, 2, 3, 0.5))
    >>> new.as_tuple()
    (2.0, 2.0)
    """
    eq = solve_nash(prices, params)
    agg = eq.aggregates
    p1, e1 = _adjust(1, prices.p1, params.q1, agg.q1_cons, agg.Y1_res)
    p2, e2 = _adjust(2, prices.p2, params.q2, agg.q2_cons, agg.Y2_res)
    events = tuple(e for e in (e1, e2) if e is not None)
    return PriceState(p1, p2), eq, events


# closed-form limits

def g_map(x: float, prices0: PriceState, params: ModelParams) -> float:
    """One downward step of ``p1`` in zone II-2 with ``p2`` frozen at ``prices0.p2``."""
    if x < 0:
        raise ValueError("g is defined for x >= 0")
    Y1, Y2, q1, q2, rho = params.Y1, params.Y2, params.q1, params.q2, params.rho
    return (Y1 + (Y2 - prices0.p2 * q2) * x / (x + rho)) / q1


def h_map(x: float, params: ModelParams) -> float:
    """One downward step of ``p1`` when ``p2`` sits at zero."""
    if x < 0:
        raise ValueError("h is defined for x >= 0")
    return (params.Y1 + x / (x + params.rho) * params.Y2) / params.q1


def limit_k(prices0: PriceState, params: ModelParams) -> float:
    """Positive fixed point of :func:`g_map`.

    >>> round(limit_k(PriceState(2, 1), ModelParams(2, 4, 2, 3, 0.5)), 7)
    1.3660254
    """
    Y1, Y2, q1, q2, rho = params.Y1, params.Y2, params.q1, params.q2, params.rho
    b = rho * q1 - Y1 - Y2 + prices0.p2 * q2
    disc = math.sqrt(b * b + 4.0 * q1 * rho * Y1)
    # pick the cancellation-free form of the positive root
    if b > 0:
        return 2.0 * rho * Y1 / (disc + b)
    return (disc - b) / (2.0 * q1)


def p1_infinity(params: ModelParams) -> float:
    """Limit of ``p1`` while ``p2`` is held at zero; the fixed point of :func:`h_map`.

    Solved from ``q1 x^2 + (rho q1 - Y1 - Y2) x - rho Y1 = 0`` without going
    through :func:`~bitrade.zones.p1_star`, so the two can be checked against
    each other.
    """
    Y1, Y2, q1, rho = params.Y1, params.Y2, params.q1, params.rho
    b = rho * q1 - Y1 - Y2
    disc = math.sqrt(b * b + 4.0 * q1 * rho * Y1)
    if b > 0:
        return 2.0 * rho * Y1 / (disc + b)
    return (disc - b) / (2.0 * q1)


def switch_steps(prices0: PriceState, params: ModelParams, max_iter: int = 10**6) -> int:
    """Number of downward ``p1`` steps before ``p1`` falls to ``p2 - rho``.

    Requires ``k < p2 - rho < p1``; otherwise ``p1`` never gets there.
    """
    k = limit_k(prices0, params)
    target = prices0.p2 - params.rho
    if not (k < target < prices0.p1):
        raise PreconditionViolated(
            f"need k < p2 - rho < p1, got k={k:g}, p2 - rho={target:g}, p1={prices0.p1:g}")
    x = prices0.p1
    for s in range(1, max_iter + 1):
        x = g_map(x, prices0, params)
        if x <= target:
            return s
    raise PreconditionViolated("g-iteration did not reach p2 - rho")


# classification

def _degenerate_l4_limit(prices: PriceState, params: ModelParams) -> float | None:
    """``k`` when ``prices`` starts an endless downward ``p1`` process towards l4."""
    p1, p2 = prices.p1, prices.p2
    if p1 <= 0 or p2 <= 0:
        return None
    Y1, Y2, q1, q2, rho = params.Y1, params.Y2, params.q1, params.q2, params.rho
    if not (Y1 < p1 * q1 - EPS and Y2 > p2 * q2 + EPS):
        return None
    if line_values(prices, params).l4 >= -EPS or p1 - p2 < -rho - EPS:
        return None
    k = limit_k(prices, params)
    if p2 - rho <= k < p1:
        return k
    return None


def _match_infinite(prices: PriceState, params: ModelParams) -> SteadyStateClass | None:
    p1, p2 = prices.p1, prices.p2
    if p2 == 0.0 and p1 > 0:
        r1 = params.Y1 + p1 / (p1 + params.rho) * params.Y2 - p1 * params.q1
        if r1 < -EPS:
            return SteadyStateClass(SteadyKind.DegenerateL1, p1_infinity(params))
        return None
    if p1 == 0.0 and p2 > 0:
        r2 = p2 / (p2 + params.rho) * params.Y1 + params.Y2 - p2 * params.q2
        if r2 < -EPS:
            return SteadyStateClass(SteadyKind.DegenerateL2, p1_infinity(params.swapped()))
        return None
    k = _degenerate_l4_limit(prices, params)
    if k is not None:
        return SteadyStateClass(SteadyKind.DegenerateL4, k)
    k = _degenerate_l4_limit(prices.swapped(), params.swapped())
    if k is not None:
        return SteadyStateClass(SteadyKind.DegenerateL3, k)
    return None


def _monotone(xs: list[float]) -> bool:
    inc = all(b >= a for a, b in zip(xs, xs[1:]))
    dec = all(b <= a for a, b in zip(xs, xs[1:]))
    return inc or dec


def _sticky_pattern(records: list[StepRecord], params: ModelParams) -> SteadyStateClass | None:
    """First infinite-process pattern that the rest of the path confirms.

    Confirmation: from the matching step on, the frozen price never changes
    and the moving one is monotone.
    """
    for i, rec in enumerate(records):
        cls = _match_infinite(rec.prices, params)
        if cls is None:
            continue
        tail = records[i:]
        if cls.kind in (SteadyKind.DegenerateL1, SteadyKind.DegenerateL4):
            frozen, moving = [r.prices.p2 for r in tail], [r.prices.p1 for r in tail]
        else:
            frozen, moving = [r.prices.p1 for r in tail], [r.prices.p2 for r in tail]
        if all(f == frozen[0] for f in frozen) and _monotone(moving):
            return cls
    return None


def classify_state(prices: PriceState, params: ModelParams, tol: float = 1e-8
                   ) -> SteadyStateClass:
    """Type of a stationary price state, judged from the income-versus-value gaps."""
    p1, p2 = prices.p1, prices.p2
    if p2 == 0.0:
        return SteadyStateClass(SteadyKind.DegenerateL1, p1)
    if p1 == 0.0:
        return SteadyStateClass(SteadyKind.DegenerateL2, p2)
    g1 = params.Y1 - p1 * params.q1
    g2 = params.Y2 - p2 * params.q2
    t1 = tol * max(1.0, params.Y1)
    t2 = tol * max(1.0, params.Y2)
    if abs(g1) <= t1 and abs(g2) <= t2:
        return SteadyStateClass(SteadyKind.TypeE)
    if g1 < -t1 and g2 > t2:
        return SteadyStateClass(SteadyKind.L4)
    if g1 > t1 and g2 < -t2:
        return SteadyStateClass(SteadyKind.L3)
    return SteadyStateClass(SteadyKind.Unresolved)


def iterate(prices0: PriceState, params: ModelParams, max_steps: int = 100_000,
            tol: float = 1e-10) -> Trajectory:
    """Run the adjustment map until prices stop moving or ``max_steps`` is hit.

    ``records[t]`` holds the prices at step ``t``; the last record is step
    ``converged_at`` (the first step whose update moves prices by less than
    ``tol``) or ``max_steps``.  Endless processes with a known analytic limit
    are classified by that limit whether or not the numeric run has settled.
    """
    if max_steps < 1 or tol <= 0:
        raise ValueError("need max_steps >= 1 and tol > 0")
    traj = Trajectory()
    prices = prices0
    for t in range(max_steps + 1):
        new, eq, events = step(prices, params)
        traj.records.append(StepRecord(t, prices, eq, events))
        if abs(new.p1 - prices.p1) + abs(new.p2 - prices.p2) < tol:
            traj.converged_at = t
            break
        if t == max_steps:
            break
        prices = new

    pattern = _sticky_pattern(traj.records, params)
    if pattern is not None:
        traj.classification = pattern
    elif traj.converged_at is not None:
        cls = classify_state(traj.final_prices, params)
        traj.classification = cls
    else:
        traj.classification = SteadyStateClass(SteadyKind.Unresolved, max_steps=max_steps)
    if traj.classification.kind is SteadyKind.Unresolved and traj.classification.max_steps is None:
        traj.classification = SteadyStateClass(SteadyKind.Unresolved, max_steps=max_steps)
    return traj
