"""Parameters, strategy profiles, payoffs and consumption accounting.

Everything here is a pure function of immutable values.  Region ``1`` hosts
consumer I (orders ``alpha`` at home, ``beta`` abroad); region ``2`` hosts
consumer II (orders ``gamma`` abroad, ``delta`` at home).  A unit shipped
across the border costs ``rho`` on top of the local price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegeneratePrice, InfeasibleProfile

#: Absolute tolerance for equality / feasibility comparisons on money and goods.
EPS = 1e-9


@dataclass(frozen=True)
class ModelParams:
    Y1: float
    Y2: float
    q1: float
    q2: float
    rho: float

    def __post_init__(self):
        for name in ("Y1", "Y2", "q1", "q2", "rho"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    def swapped(self) -> "ModelParams":
        """Same economy with the two regions relabelled."""
        return ModelParams(self.Y2, self.Y1, self.q2, self.q1, self.rho)

    @property
    def E_tilde(self) -> "PriceState":
        """Price pair at which both incomes exactly buy local supply."""
        return PriceState(self.Y1 / self.q1, self.Y2 / self.q2)


@dataclass(frozen=True)
class PriceState:
    p1: float
    p2: float

    def __post_init__(self):
        if not (math.isfinite(self.p1) and math.isfinite(self.p2)):
            raise ValueError(f"prices must be finite, got ({self.p1}, {self.p2})")
        if self.p1 < 0 or self.p2 < 0:
            raise ValueError(f"prices must be >= 0, got ({self.p1}, {self.p2})")

    def p1_prime(self, params: ModelParams) -> float:
        return self.p1 + params.rho

    def p2_prime(self, params: ModelParams) -> float:
        return self.p2 + params.rho

    @property
    def delta_p(self) -> float:
        return self.p1 - self.p2

    @property
    def degenerate(self) -> bool:
        return self.p1 == 0.0 or self.p2 == 0.0

    def swapped(self) -> "PriceState":
        return PriceState(self.p2, self.p1)

    def as_tuple(self) -> tuple[float, float]:
        return (self.p1, self.p2)


@dataclass(frozen=True)
class StrategyProfile:
    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    def swapped(self) -> "StrategyProfile":
        # consumer II becomes consumer I: its home order is the new alpha
        return StrategyProfile(self.delta, self.gamma, self.beta, self.alpha)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)


@dataclass(frozen=True)
class Aggregates:
    q1_cons: float
    q2_cons: float
    Y1_res: float
    Y2_res: float
    Y1_cons: float
    Y2_cons: float


@dataclass(frozen=True)
class TheoremAggregates:
    RLS1: float
    RLS2: float
    NLS1: float
    NLS2: float
    NFR1: float
    NFR2: float
    TRFR1: float
    TRFR2: float
    T1: float
    T2: float


def expenditure1(alpha: float, beta: float, prices: PriceState, params: ModelParams) -> float:
    return alpha * prices.p1 + beta * (prices.p2 + params.rho)


def expenditure2(gamma: float, delta: float, prices: PriceState, params: ModelParams) -> float:
    return gamma * (prices.p1 + params.rho) + delta * prices.p2


def feasible(profile: StrategyProfile, prices: PriceState, params: ModelParams,
             eps: float = EPS) -> bool:
    """Both budget constraints hold, up to ``eps``.

    >>> feasible(StrategyProfile(1, 0, 0.4, 3), PriceState(2, 1), ModelParams(2, 4, 2, 3, 0.5))
    True
    """
    spend1 = expenditure1(profile.alpha, profile.beta, prices, params)
    spend2 = expenditure2(profile.gamma, profile.delta, prices, params)
    return spend1 <= params.Y1 + eps and spend2 <= params.Y2 + eps


def payoff1(profile: StrategyProfile, params: ModelParams) -> float:
    """Goods received by consumer I under local dominance."""
    leftover2 = max(0.0, params.q2 - profile.delta)
    return min(profile.alpha, params.q1) + min(profile.beta, leftover2)


def payoff2(profile: StrategyProfile, params: ModelParams) -> float:
    """Goods received by consumer II under local dominance."""
    leftover1 = max(0.0, params.q1 - profile.alpha)
    return min(profile.delta, params.q2) + min(profile.gamma, leftover1)


def aggregates(profile: StrategyProfile, prices: PriceState, params: ModelParams) -> Aggregates:
    """Consumption and residual-income accounting for a feasible profile.

    A region with a zero price reports its whole supply as consumed (free
    disposal): whatever the nominal orders, everything on offer is taken.
    """
    if not feasible(profile, prices, params):
        raise InfeasibleProfile(f"{profile} violates a budget at {prices}")
    a, b, g, d = profile.as_tuple()
    p1p = prices.p1 + params.rho
    p2p = prices.p2 + params.rho
    q1_cons = params.q1 if prices.p1 == 0.0 else a + g
    q2_cons = params.q2 if prices.p2 == 0.0 else b + d
    return Aggregates(
        q1_cons=q1_cons,
        q2_cons=q2_cons,
        Y1_res=params.Y1 - p2p * b,
        Y2_res=params.Y2 - p1p * g,
        Y1_cons=prices.p1 * a + p2p * b,
        Y2_cons=p1p * g + prices.p2 * d,
    )


def theorem_aggregates(prices: PriceState, params: ModelParams) -> TheoremAggregates:
    """Real/nominal supply and resource measures used to state the dynamics results."""
    p1, p2 = prices.p1, prices.p2
    if p1 <= 0 or p2 <= 0:
        raise DegeneratePrice(f"aggregates undefined at zero price {prices}")
    p1p, p2p = p1 + params.rho, p2 + params.rho
    Y1, Y2, q1, q2 = params.Y1, params.Y2, params.q1, params.q2
    return TheoremAggregates(
        RLS1=q1,
        RLS2=q2,
        NLS1=p1 * q1,
        NLS2=p2 * q2,
        NFR1=Y1,
        NFR2=Y2,
        TRFR1=Y1 / p1 + Y2 / p1p,
        TRFR2=Y1 / p2p + Y2 / p2,
        T1=p2 * q2 / p1p + q1,
        T2=p1 * q1 / p2p + q2,
    )
