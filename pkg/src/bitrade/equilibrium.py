"""Best replies, selection rules and the closed-form Nash equilibrium of the one-period game.

Selection follows three refinements applied in order:

* SR1: among payoff-maximising orders pick the one that spends least;
* SR2: if expenditure still ties, buy as much as possible at home;
* SR3: at a zero price the whole local supply counts as bought.

Consumer II's best reply is computed by relabelling the regions and asking
for consumer I's reply in the mirrored economy, so every table cell is coded
once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import DegeneratePrice
from .model import (EPS, Aggregates, ModelParams, PriceState, StrategyProfile,
                    aggregates, expenditure1, expenditure2, feasible)
from .zones import (Boundary, CaseRelation, DeltaPBranch, Zone, ZoneLabel,
                    _raw_label, case_relation, classify, classify_degenerate,
                    delta_p_branch, orientation_gap, underlying_zone)

Pair = tuple[float, float]


@dataclass(frozen=True)
class BestReply:
    """One consumer's selected reply.

    Attributes:
        reply: ``(alpha, beta)`` for consumer I, ``(gamma, delta)`` for II.
        selection_note: table cell and the rule that picked the point.
        raw_set: vertices of the payoff-maximising set before selection
            (a single vertex when the reply is unique).
    """

    reply: Pair
    selection_note: str
    raw_set: tuple[Pair, ...]


@dataclass(frozen=True)
class EquilibriumResult:
    """Selected equilibrium of the one-period game.

    ``zone`` is the label of the economy actually fed to the tables; when
    ``swapped`` is set that is the relabelled economy (region 1 and 2
    exchanged), while ``profile`` and ``aggregates`` are always reported in
    the caller's labelling.
    """

    profile: StrategyProfile
    zone: ZoneLabel
    branch: DeltaPBranch
    aggregates: Aggregates
    degenerate: bool
    swapped: bool = False


def _check_prices(prices: PriceState):
    if prices.p1 == 0.0 and prices.p2 == 0.0:
        raise DegeneratePrice("both prices are zero")


def _br1_zero_p1(c: float, Y1: float, q1: float, p2p: float) -> BestReply:
    # home goods are free, so alpha = q1 always; spend everything abroad if needed
    cap = Y1 / p2p
    if c <= EPS:
        return BestReply((q1, 0.0), "p1=0, row I: SR3", ((q1, 0.0),))
    if c <= cap + EPS:
        return BestReply((q1, c), "p1=0, row II: SR3+SR1", ((q1, c),))
    return BestReply((q1, cap), "p1=0, row III: SR3", ((q1, cap),))


def best_reply_1(gamma_delta: Pair, prices: PriceState, params: ModelParams) -> BestReply:
    """Consumer I's selected reply to consumer II's orders ``(gamma, delta)``.

    >>> best_reply_1((0.0, 3.0), PriceState(1, 1), ModelParams(4, 6, 2, 3, 0.5)).reply
    (2, 0.0)
    """
    _check_prices(prices)
    gamma, delta = gamma_delta
    if gamma < 0 or delta < 0:
        raise ValueError(f"opponent orders must be >= 0, got {gamma_delta}")
    Y1, q1, q2 = params.Y1, params.q1, params.q2
    p1 = prices.p1
    p2p = prices.p2 + params.rho
    c = q2 - delta
    if p1 == 0.0:
        return _br1_zero_p1(c, Y1, q1, p2p)

    afford = Y1 / p1
    rich = Y1 - p1 * q1 > EPS  # column A: can buy all of q1 and have money left
    # price relation: (1) home cheaper, (2) equal, (3) abroad cheaper
    if abs(p1 - p2p) <= EPS:
        rel = 2
    else:
        rel = 1 if p1 < p2p else 3
    rest = (Y1 - p1 * q1) / p2p  # spend what is left after alpha = q1

    if c <= EPS:
        if rich:
            return BestReply((q1, 0.0), "row I, A: SR1",
                             ((q1, 0.0), (afford, 0.0), (q1, rest)))
        return BestReply((afford, 0.0), "row I, B", ((afford, 0.0),))

    if c <= Y1 / p2p + EPS:
        if rich and p1 * q1 + p2p * c < Y1 - EPS:
            return BestReply((q1, c), "row II, A1: SR1", ((q1, c),))
        if rel == 3:
            a = max(0.0, (Y1 - p2p * c) / p1)
            cell = "row II, A2 (3)" if rich else "row II, B (3)"
            return BestReply((a, c), cell, ((a, c),))
        if rich:
            cell = "row II, A2 (1)" if rel == 1 else "row II, A2 (2): SR2 as in (1)"
            raw = ((q1, rest),) if rel == 1 else ((q1, rest), ((Y1 - p2p * c) / p1, c))
            return BestReply((q1, rest), cell, raw)
        cell = "row II, B (1)" if rel == 1 else "row II, B (2): SR2 as in (1)"
        raw = ((afford, 0.0),) if rel == 1 else ((afford, 0.0), ((Y1 - p2p * c) / p1, c))
        return BestReply((afford, 0.0), cell, raw)

    # row III: region 2 leftovers exceed what the whole budget buys abroad
    abroad = Y1 / p2p
    if rel == 3:
        cell = "row III, A (3)" if rich else "row III, B (3)"
        return BestReply((0.0, abroad), cell, ((0.0, abroad),))
    if rich:
        cell = "row III, A (1)" if rel == 1 else "row III, A (2): SR2 as in (1)"
        raw = ((q1, rest),) if rel == 1 else ((q1, rest), (0.0, abroad))
        return BestReply((q1, rest), cell, raw)
    cell = "row III, B (1)" if rel == 1 else "row III, B (2): SR2 as in (1)"
    raw = ((afford, 0.0),) if rel == 1 else ((afford, 0.0), (0.0, abroad))
    return BestReply((afford, 0.0), cell, raw)


def best_reply_2(alpha_beta: Pair, prices: PriceState, params: ModelParams) -> BestReply:
    """Consumer II's selected reply to consumer I's orders ``(alpha, beta)``.

    >>> best_reply_2((1.0, 0.0), PriceState(2, 1), ModelParams(2, 6, 2, 3, 0.5)).reply
    (1.0, 3)
    """
    alpha, beta = alpha_beta
    # in the mirrored economy consumer II is consumer I and (alpha, beta) -> (delta', gamma')
    mirrored = best_reply_1((beta, alpha), prices.swapped(), params.swapped())
    a, b = mirrored.reply
    raw = tuple((y, x) for x, y in mirrored.raw_set)
    return BestReply((b, a), mirrored.selection_note, raw)


# closed forms, in the oriented frame (p2 q2 <= p1 q1)

def _forms(prices: PriceState, params: ModelParams) -> dict[str, Callable[[], tuple]]:
    Y1, Y2, q1, q2 = params.Y1, params.Y2, params.q1, params.q2
    p1, p2 = prices.p1, prices.p2
    p1p, p2p = p1 + params.rho, p2 + params.rho
    return {
        "all_home_q": lambda: (q1, 0.0, 0.0, q2),
        # the caps equal the first argument inside the zone; they only bind
        # within rounding of the zone's boundary line
        "II3": lambda: (Y1 / p1, 0.0, min(q1 - Y1 / p1, (Y2 - p2 * q2) / p1p), q2),
        "II2a": lambda: (Y1 / p1, 0.0, (Y2 - p2 * q2) / p1p, q2),
        "II2b": lambda: (Y1 / p1, 0.0, q1 - Y1 / p1, (Y2 - p1p * (q1 - Y1 / p1)) / p2),
        "II_abroad": lambda: (Y1 / p1, 0.0, Y2 / p1p, 0.0),
        "home": lambda: (Y1 / p1, 0.0, 0.0, Y2 / p2),
        "I_gt": lambda: ((Y1 - p2p * (q2 - Y2 / p2)) / p1, q2 - Y2 / p2, 0.0, Y2 / p2),
        "I_abroad": lambda: (0.0, Y1 / p2p, 0.0, Y2 / p2),
        "IV1": lambda: (q1, min(q2 - Y2 / p2, (Y1 - p1 * q1) / p2p), 0.0, Y2 / p2),
        "IV2a": lambda: (q1, (Y1 - p1 * q1) / p2p, 0.0, Y2 / p2),
        # like I_gt, but consumer I's budget may not cover region 2's leftovers
        # (possible in zone IV only when p2' q2 > p1 q1)
        "IV2b": lambda: _iv2b(Y1, Y2, q2, p1, p2, p2p),
    }


def _iv2b(Y1, Y2, q2, p1, p2, p2p):
    beta = min(q2 - Y2 / p2, Y1 / p2p)
    return ((Y1 - p2p * beta) / p1, beta, 0.0, Y2 / p2)


def _three_way(within: str, below: str, above: str) -> Callable[[DeltaPBranch], str]:
    def pick(branch: DeltaPBranch) -> str:
        if not branch.ge_minus_rho:
            return below
        if not branch.le_plus_rho:
            return above
        return within
    return pick


_TABLE: dict[Zone, Callable[[DeltaPBranch], str]] = {
    Zone.III: lambda b: "all_home_q",
    Zone.II_3: lambda b: "II3",
    Zone.II_2: lambda b: "II2a" if b.ge_minus_rho else "II2b",
    Zone.II_1: lambda b: "II2a" if b.ge_minus_rho else "II_abroad",
    Zone.I_1: _three_way("home", "II2b", "I_gt"),
    Zone.I_2: _three_way("home", "II_abroad", "I_gt"),
    Zone.I_3: _three_way("home", "II_abroad", "I_abroad"),
    Zone.IV_1: lambda b: "IV1",
    Zone.IV_2: lambda b: "IV2a" if b.le_plus_rho else "IV2b",
    Zone.Z1_1: _three_way("home", "II_abroad", "I_abroad"),
    Zone.Z1_2: _three_way("home", "II2b", "I_abroad"),
    Zone.Z1_3: _three_way("home", "II_abroad", "I_gt"),
    Zone.Z1_4: _three_way("home", "II2b", "I_gt"),
}


def _clean(values: tuple, tol: float = 1e-9) -> StrategyProfile:
    out = []
    for v in values:
        if v < 0:
            # rounding only; a genuinely negative order means a table/zone mismatch
            assert v > -tol * max(1.0, abs(v)) - tol, f"negative order {v} in {values}"
            v = 0.0
        out.append(v)
    return StrategyProfile(*out)


def table_profile(zone: Zone, branch: DeltaPBranch, prices: PriceState,
                  params: ModelParams) -> StrategyProfile:
    """Closed-form equilibrium for an oriented, strictly positive price state."""
    form = _TABLE[zone](branch)
    return _clean(_forms(prices, params)[form]())


def _degenerate_p2_zero(prices: PriceState, params: ModelParams) -> StrategyProfile:
    # region 2 goods are free and fully taken by consumer II (SR3)
    Y1, Y2, q1, q2 = params.Y1, params.Y2, params.q1, params.q2
    p1p = prices.p1 + params.rho
    alpha = min(q1, Y1 / prices.p1)
    gamma = min(max(q1 - alpha, 0.0), Y2 / p1p)
    return StrategyProfile(alpha, 0.0, gamma, q2)


def solve_nash(prices: PriceState, params: ModelParams) -> EquilibriumResult:
    """Selected Nash equilibrium at the given prices.

    States with ``p2 q2 > p1 q1`` outside zone III are solved in the
    relabelled economy and mapped back; the result's ``swapped`` flag says so.

    >>> solve_nash(PriceState(2, 1), ModelParams(2, 4, 2, 3, 0.5)).profile.as_tuple()
    (1.0, 0.0, 0.4, 3)
    """
    _check_prices(prices)
    branch = delta_p_branch(prices, params)
    if prices.degenerate:
        if prices.p1 == 0.0:
            inner = solve_nash(prices.swapped(), params.swapped())
            profile = inner.profile.swapped()
            zone = inner.zone
            swapped = True
        else:
            profile = _degenerate_p2_zero(prices, params)
            zone = classify_degenerate(prices, params)
            swapped = False
        return EquilibriumResult(profile, zone, branch, aggregates(profile, prices, params),
                                 True, swapped)

    if _raw_label(prices, params) is Zone.III:
        profile = table_profile(Zone.III, branch, prices, params)
        return EquilibriumResult(profile, Zone.III, branch,
                                 aggregates(profile, prices, params), False)

    if orientation_gap(prices, params) < -EPS:
        inner = solve_nash(prices.swapped(), params.swapped())
        profile = inner.profile.swapped()
        return EquilibriumResult(profile, inner.zone, branch,
                                 aggregates(profile, prices, params), False, True)

    label = classify(prices, params)
    zone = underlying_zone(label)
    assert zone is not None, label
    profile = table_profile(zone, branch, prices, params)
    return EquilibriumResult(profile, label, branch, aggregates(profile, prices, params), False)


def is_fixed_point(profile: StrategyProfile, prices: PriceState, params: ModelParams,
                   tol: float = 1e-9) -> bool:
    """Both consumers' selected replies reproduce the profile."""
    a, b, g, d = profile.as_tuple()
    r1 = best_reply_1((g, d), prices, params).reply
    r2 = best_reply_2((a, b), prices, params).reply
    return all(abs(x - y) <= tol * max(1.0, abs(y)) for x, y in zip(r1 + r2, (a, b, g, d)))


def lemma_violations(profile: StrategyProfile, prices: PriceState, params: ModelParams,
                     eps: float = 1e-8) -> list[str]:
    """Structural properties every selected equilibrium must have.

    Returns a list of human-readable violations (empty when all hold):
    no region is over-ordered, no region is both undersold and left with
    unspent resources, and each consumer either buys all local supply or
    spends the whole budget.
    """
    out = []
    a, b, g, d = profile.as_tuple()
    if not feasible(profile, prices, params, eps):
        return [f"infeasible profile {profile.as_tuple()}"]
    if a + g > params.q1 + eps:
        out.append(f"region 1 over-ordered: {a + g} > {params.q1}")
    if b + d > params.q2 + eps:
        out.append(f"region 2 over-ordered: {b + d} > {params.q2}")
    agg = aggregates(profile, prices, params)
    for i, (qc, q, yres, p) in enumerate(
            ((agg.q1_cons, params.q1, agg.Y1_res, prices.p1),
             (agg.q2_cons, params.q2, agg.Y2_res, prices.p2)), start=1):
        if qc < q - eps and yres > p * q + eps:
            out.append(f"region {i} undersold while income is left over")
    spend1 = expenditure1(a, b, prices, params)
    spend2 = expenditure2(g, d, prices, params)
    if abs(a - params.q1) > eps and abs(spend1 - params.Y1) > eps:
        out.append("consumer I neither buys q1 at home nor exhausts Y1")
    if abs(d - params.q2) > eps and abs(spend2 - params.Y2) > eps:
        out.append("consumer II neither buys q2 at home nor exhausts Y2")
    return out


__all__ = [
    "BestReply", "EquilibriumResult", "best_reply_1", "best_reply_2", "solve_nash",
    "table_profile", "is_fixed_point", "lemma_violations", "Boundary", "CaseRelation",
    "case_relation",
]
