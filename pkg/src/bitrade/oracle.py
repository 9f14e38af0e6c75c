"""Brute-force equilibrium search on a grid, used to cross-check the closed forms.

Nothing here uses the best-reply tables: each consumer's reply is found by
evaluating the payoff on every grid point of the budget set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePrice, NoConvergence
from .model import ModelParams, PriceState, StrategyProfile


@dataclass(frozen=True)
class OracleResult:
    profile: StrategyProfile
    payoff1: float
    payoff2: float
    sweeps: int
    bound: float  # 2 * budget diameter / grid_n, the expected payoff agreement


class _Grid:
    """Budget-feasible order pairs ``(home, abroad)`` for one consumer."""

    def __init__(self, Y: float, p_home: float, p_abroad: float, q_home: float, n: int):
        home_max = Y / p_home if p_home > 0 else 2.0 * q_home
        abroad_max = Y / p_abroad
        h, a = np.meshgrid(np.linspace(0.0, home_max, n), np.linspace(0.0, abroad_max, n),
                           indexing="ij")
        h, a = h.ravel(), a.ravel()
        spend = p_home * h + p_abroad * a
        keep = spend <= Y * (1 + 1e-12)
        self.home, self.abroad, self.spend = h[keep], a[keep], spend[keep]
        self.diameter = float(np.hypot(home_max, abroad_max))

    def best(self, q_home: float, leftover_abroad: float) -> int:
        pay = np.minimum(self.home, q_home) + np.minimum(self.abroad, leftover_abroad)
        top = pay.max()
        cand = np.flatnonzero(pay >= top - 1e-12)
        spend = self.spend[cand]
        cand = cand[spend <= spend.min() + 1e-12]
        return int(cand[np.argmax(self.home[cand])])


def brute_force_nash(prices: PriceState, params: ModelParams, grid_n: int = 200,
                     max_sweeps: int = 100) -> OracleResult:
    """Alternating grid best responses until neither consumer moves.

    Ties are broken by payoff, then lower expenditure, then larger home order.
    Raises :class:`NoConvergence` on a cycle or when ``max_sweeps`` is reached.
    """
    if grid_n < 50:
        raise ValueError("grid_n must be >= 50")
    if prices.p1 == 0.0 and prices.p2 == 0.0:
        raise DegeneratePrice("both prices are zero")
    rho = params.rho
    q1, q2 = params.q1, params.q2
    g1 = _Grid(params.Y1, prices.p1, prices.p2 + rho, q1, grid_n)
    g2 = _Grid(params.Y2, prices.p2, prices.p1 + rho, q2, grid_n)

    i1 = g1.best(q1, q2)  # consumer I facing no competition
    i2 = g2.best(q2, max(0.0, q1 - g1.home[i1]))
    seen = {(i1, i2)}
    for sweep in range(1, max_sweeps + 1):
        n1 = g1.best(q1, max(0.0, q2 - g2.home[i2]))
        n2 = g2.best(q2, max(0.0, q1 - g1.home[n1]))
        if (n1, n2) == (i1, i2):
            alpha, beta = g1.home[i1], g1.abroad[i1]
            delta, gamma = g2.home[i2], g2.abroad[i2]
            pay1 = min(alpha, q1) + min(beta, max(0.0, q2 - delta))
            pay2 = min(delta, q2) + min(gamma, max(0.0, q1 - alpha))
            return OracleResult(StrategyProfile(alpha, beta, gamma, delta), pay1, pay2,
                                sweep, 2.0 * max(g1.diameter, g2.diameter) / grid_n)
        if (n1, n2) in seen:
            raise NoConvergence(f"grid best responses cycle after {sweep} sweeps")
        seen.add((n1, n2))
        i1, i2 = n1, n2
    raise NoConvergence(f"no grid fixed point within {max_sweeps} sweeps")

