"""Partition of income space into zones, boundary lines and their price-space images.

For fixed prices the four lines ``l1..l4`` and the two axes-parallel lines
``Y_i = p_i q_i`` cut the income quadrant into the zones that decide which
closed-form Nash equilibrium applies.  Each line is represented by a signed
residual that is zero on the line and positive strictly above it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

from .errors import DegeneratePrice, DomainError, OrientationViolated
from .model import EPS, ModelParams, PriceState, theorem_aggregates


class Zone(enum.Enum):
    III = "III"
    II_1 = "II-1"
    II_2 = "II-2"
    II_3 = "II-3"
    I_1 = "I-1"
    I_2 = "I-2"
    I_3 = "I-3"
    IV_1 = "IV-1"
    IV_2 = "IV-2"
    Z1_1 = "1-1"
    Z1_2 = "1-2"
    Z1_3 = "1-3"
    Z1_4 = "1-4"
    DegenerateII_1 = "degenerate II-1"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Boundary:
    """A state the partition leaves ambiguous.

    ``underlying`` is the label the inequality systems give when the tie is
    resolved with the usual tolerance convention, or ``None`` if there is none.
    """

    detail: str
    underlying: Zone | None = None

    def __str__(self):
        return f"Boundary({self.detail})"


ZoneLabel = Union[Zone, Boundary]

NONDEGENERATE_ZONES = tuple(z for z in Zone if z is not Zone.DegenerateII_1)


class CaseRelation(enum.Enum):
    """How the cost of buying all of region 2 from region 1 compares with ``p1 q1``."""

    Lt = "p2' q2 < p1 q1"
    Eq = "p2' q2 = p1 q1"
    Gt = "p2' q2 > p1 q1"


class DeltaPBranch(enum.Enum):
    Inside = "-rho < dp < rho"
    EqMinusRho = "dp = -rho"
    LtMinusRho = "dp < -rho"
    EqPlusRho = "dp = rho"
    GtPlusRho = "dp > rho"

    def mirrored(self) -> "DeltaPBranch":
        """Branch seen after swapping the regions (``dp -> -dp``)."""
        return _MIRROR[self]

    # the price-relation predicates used by the equilibrium tables
    @property
    def ge_minus_rho(self) -> bool:
        return self is not DeltaPBranch.LtMinusRho

    @property
    def le_plus_rho(self) -> bool:
        return self is not DeltaPBranch.GtPlusRho

    @property
    def within_rho(self) -> bool:
        return self.ge_minus_rho and self.le_plus_rho


_MIRROR = {
    DeltaPBranch.Inside: DeltaPBranch.Inside,
    DeltaPBranch.EqMinusRho: DeltaPBranch.EqPlusRho,
    DeltaPBranch.EqPlusRho: DeltaPBranch.EqMinusRho,
    DeltaPBranch.LtMinusRho: DeltaPBranch.GtPlusRho,
    DeltaPBranch.GtPlusRho: DeltaPBranch.LtMinusRho,
}


class LineValues(NamedTuple):
    l1: float
    l2: float
    l3: float
    l4: float


class PriceSpaceLoci(NamedTuple):
    p1_star: float
    p2_star: float
    h3: Callable[[float], float]
    h4: Callable[[float], float]


def _sign(r: float, eps: float = EPS) -> int:
    if r > eps:
        return 1
    if r < -eps:
        return -1
    return 0


def _require_positive(prices: PriceState):
    if prices.p1 <= 0 or prices.p2 <= 0:
        raise DegeneratePrice(f"operation needs p1 > 0 and p2 > 0, got {prices}")


def line_values(prices: PriceState, params: ModelParams) -> LineValues:
    """Signed residuals of ``(Y1, Y2)`` against the four lines (positive = above).

    Each residual is a positive multiple of the matching aggregate gap,
    e.g. ``l1 = p1 * (TRFR1 - q1)`` and ``l4 = p1 * (TRFR1 - T1)``.
    """
    _require_positive(prices)
    p1, p2 = prices.p1, prices.p2
    p1p, p2p = p1 + params.rho, p2 + params.rho
    Y1, Y2, q1, q2 = params.Y1, params.Y2, params.q1, params.q2
    r1 = Y1 + (p1 / p1p) * Y2 - p1 * q1
    r2 = (p2 / p2p) * Y1 + Y2 - p2 * q2
    r3 = (p2 / p2p) * Y1 + Y2 - (p2 / p2p) * (p1 * q1 + p2p * q2)
    r4 = Y1 + (p1 / p1p) * Y2 - (p1 / p1p) * (p1p * q1 + p2 * q2)
    return LineValues(r1, r2, r3, r4)


def case_relation(prices: PriceState, params: ModelParams, eps: float = EPS) -> CaseRelation:
    gap = (prices.p2 + params.rho) * params.q2 - prices.p1 * params.q1
    s = _sign(gap, eps)
    return {-1: CaseRelation.Lt, 0: CaseRelation.Eq, 1: CaseRelation.Gt}[s]


def delta_p_branch(prices: PriceState, params: ModelParams, eps: float = EPS) -> DeltaPBranch:
    dp = prices.p1 - prices.p2
    rho = params.rho
    if abs(dp + rho) <= eps:
        return DeltaPBranch.EqMinusRho
    if abs(dp - rho) <= eps:
        return DeltaPBranch.EqPlusRho
    if dp < -rho:
        return DeltaPBranch.LtMinusRho
    if dp > rho:
        return DeltaPBranch.GtPlusRho
    return DeltaPBranch.Inside


def orientation_gap(prices: PriceState, params: ModelParams) -> float:
    """``p1 q1 - p2 q2``; the zone tables assume this is positive."""
    return prices.p1 * params.q1 - prices.p2 * params.q2


def swap_regions(prices: PriceState, params: ModelParams) -> tuple[PriceState, ModelParams]:
    """Relabel region 1 as region 2 and vice versa."""
    return prices.swapped(), params.swapped()


def _raw_label(prices: PriceState, params: ModelParams, eps: float = EPS) -> Zone:
    """Zone from the inequality systems, assuming the orientation holds."""
    Y1, Y2 = params.Y1, params.Y2
    rich1 = Y1 - prices.p1 * params.q1 >= -eps
    rich2 = Y2 - prices.p2 * params.q2 >= -eps
    if rich1 and rich2:
        return Zone.III
    r = line_values(prices, params)
    s1, s2, s3, s4 = (_sign(v, eps) for v in r)
    if rich2:
        if s1 < 0:
            return Zone.II_1
        if s4 < 0:
            return Zone.II_2
        return Zone.II_3
    if rich1:
        return Zone.IV_1 if s3 >= 0 else Zone.IV_2
    # zone I
    if case_relation(prices, params, eps) is CaseRelation.Gt:
        if s1 < 0:
            return Zone.Z1_1 if s2 < 0 else Zone.Z1_3
        return Zone.Z1_2 if s2 < 0 else Zone.Z1_4
    if s1 >= 0:
        return Zone.I_1
    if s2 >= 0:
        return Zone.I_2
    return Zone.I_3


def classify(prices: PriceState, params: ModelParams, eps: float = EPS) -> ZoneLabel:
    """Zone of the income point ``(Y1, Y2)`` for strictly positive prices.

    Zone III does not depend on which region is labelled first, so it is
    returned whatever the orientation.  Any other zone requires
    ``p2 q2 < p1 q1``; an exact tie yields a :class:`Boundary` carrying the
    label the tables would use.
    """
    _require_positive(prices)
    label = _raw_label(prices, params, eps)
    if label is Zone.III:
        return label
    s = _sign(orientation_gap(prices, params), eps)
    if s < 0:
        raise OrientationViolated(
            f"p2*q2 = {prices.p2 * params.q2:g} exceeds p1*q1 = {prices.p1 * params.q1:g}; "
            "swap the regions (zones.swap_regions) before classifying")
    if s == 0:
        return Boundary("orientation tie p1*q1 = p2*q2", label)
    return label


def classify_degenerate(prices: PriceState, params: ModelParams, eps: float = EPS) -> ZoneLabel:
    """Label for a state with exactly one zero price."""
    p1, p2 = prices.p1, prices.p2
    if (p1 == 0.0) == (p2 == 0.0):
        raise DegeneratePrice(f"expected exactly one zero price, got {prices}")
    rho = params.rho
    if p2 == 0.0:
        r1 = params.Y1 + p1 / (p1 + rho) * params.Y2 - p1 * params.q1
        if params.Y1 < p1 * params.q1 - eps and r1 < -eps:
            return Zone.DegenerateII_1
        return Boundary("p2 = 0, on or above l1" if r1 >= -eps else "p2 = 0, Y1 >= p1 q1")
    r2 = p2 / (p2 + rho) * params.Y1 + params.Y2 - p2 * params.q2
    if r2 < -eps:
        return Boundary("p1 = 0, strictly below l2")
    return Boundary("p1 = 0, on or above l2")


def underlying_zone(label: ZoneLabel) -> Zone | None:
    return label.underlying if isinstance(label, Boundary) else label


def p1_star(params: ModelParams) -> float:
    """Price at which ``(Y1, Y2)`` lies on ``l1`` (positive root)."""
    Y1, Y2, q1, rho = params.Y1, params.Y2, params.q1, params.rho
    b = Y1 + Y2 - rho * q1
    return (b + math.sqrt(b * b + 4.0 * rho * q1 * Y1)) / (2.0 * q1)


def p2_star(params: ModelParams) -> float:
    return p1_star(params.swapped())


def h3(p2: float, params: ModelParams) -> float:
    """``p1`` on the image of ``l3`` in price space, as a function of ``p2``."""
    if p2 <= 0:
        raise DomainError(f"h3 needs p2 > 0, got {p2}")
    Y1, Y2, q1, q2, rho = params.Y1, params.Y2, params.q1, params.q2, params.rho
    return (Y1 + Y2 - rho * q2 - p2 * q2 + rho * Y2 / p2) / q1


def h4(p1: float, params: ModelParams) -> float:
    """``p2`` on the image of ``l4`` in price space, as a function of ``p1``."""
    if p1 <= 0:
        raise DomainError(f"h4 needs p1 > 0, got {p1}")
    return h3(p1, params.swapped())


def price_space_loci(params: ModelParams) -> PriceSpaceLoci:
    return PriceSpaceLoci(
        p1_star=p1_star(params),
        p2_star=p2_star(params),
        h3=lambda p2: h3(p2, params),
        h4=lambda p1: h4(p1, params),
    )


def aggregate_relations(prices: PriceState, params: ModelParams) -> dict[str, int]:
    """Position of ``(Y1, Y2)`` relative to each line, read off the aggregates.

    Returns ``+1`` (above), ``0`` (on) or ``-1`` (below) per line using
    ``RLS_i`` vs ``TRFR_i`` for ``l1``/``l2``, ``T2`` vs ``TRFR2`` for ``l3``
    and ``T1`` vs ``TRFR1`` for ``l4``.  Comparisons are made on the money
    scale (multiplied by the relevant price) so the same tolerance applies as
    for :func:`line_values`.
    """
    agg = theorem_aggregates(prices, params)
    p1, p2 = prices.p1, prices.p2
    return {
        "l1": _sign(p1 * (agg.TRFR1 - agg.RLS1)),
        "l2": _sign(p2 * (agg.TRFR2 - agg.RLS2)),
        "l3": _sign(p2 * (agg.TRFR2 - agg.T2)),
        "l4": _sign(p1 * (agg.TRFR1 - agg.T1)),
    }


def line_relations(prices: PriceState, params: ModelParams) -> dict[str, int]:
    r = line_values(prices, params)
    return {name: _sign(v) for name, v in zip(("l1", "l2", "l3", "l4"), r)}


def price_space_relations(prices: PriceState, params: ModelParams) -> dict[str, int]:
    """Same positions as :func:`line_relations`, via the price-space loci.

    Above ``l1`` iff ``p1 < p1*``; above ``l3`` iff ``p1 < h3(p2)``; and the
    mirror statements for ``l2`` and ``l4``.
    """
    loci = price_space_loci(params)
    p1, p2 = prices.p1, prices.p2
    return {
        "l1": _sign(loci.p1_star - p1),
        "l2": _sign(loci.p2_star - p2),
        "l3": _sign(loci.h3(p2) - p1),
        "l4": _sign(loci.h4(p1) - p2),
    }
