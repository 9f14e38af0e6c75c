import math

import numpy as np
import pytest

from bitrade.discrete import (Direction, SteadyKind, g_map, h_map, iterate, limit_k, p1_infinity,
                              step, switch_steps)
from bitrade.equilibrium import solve_nash
from bitrade.errors import PreconditionViolated
from bitrade.model import ModelParams, PriceState
from bitrade.zones import DeltaPBranch, Zone, classify, line_values, p1_star

P_III = ModelParams(4, 6, 2, 3, 0.5)
P_II2 = ModelParams(2, 4, 2, 3, 0.5)
P_II3 = ModelParams(2, 6, 2, 3, 0.5)
K = (math.sqrt(12) + 2) / 4


class TestStep:
    def test_zone_iii_both_up(self):
        new, _, events = step(PriceState(1, 1), P_III)
        assert new.as_tuple() == (2, 2)
        assert {e.direction for e in events} == {Direction.Up}

    def test_zone_ii3_p2_up(self):
        new, _, events = step(PriceState(2, 1), P_II3)
        assert new.p1 == 2
        assert new.p2 == pytest.approx(3.5 / 3, abs=1e-12)
        assert [e.region for e in events] == [2]

    def test_zone_ii2_p1_down(self):
        new, _, events = step(PriceState(2, 1), P_II2)
        assert new.p1 == pytest.approx(1.4, abs=1e-12)
        assert new.p2 == 1
        assert events[0].direction is Direction.Down


class TestIterate:
    def test_type_e(self):
        tr = iterate(PriceState(1, 1), P_III)
        assert tr.converged_at == 1
        assert tr.classification.kind is SteadyKind.TypeE
        assert tr.final_prices.as_tuple() == (2, 2)

    def test_degenerate_l4(self):
        tr = iterate(PriceState(2, 1), P_II2)
        assert tr.classification.kind is SteadyKind.DegenerateL4
        assert tr.classification.limit == pytest.approx(K, abs=1e-12)

    def test_l4(self):
        tr = iterate(PriceState(2, 1), P_II3)
        assert tr.converged_at == 1
        assert tr.classification.kind is SteadyKind.L4
        assert tr.final_prices.as_tuple() == pytest.approx((2, 7 / 6), abs=1e-12)

    def test_records_start_at_initial_prices(self):
        p0 = PriceState(2, 1)
        tr = iterate(p0, P_II2, max_steps=5)
        assert tr.records[0].prices == p0
        assert [r.t for r in tr.records] == list(range(len(tr.records)))

    def test_prices_change_only_through_events(self):
        tr = iterate(PriceState(3, 0.4), ModelParams(1.5, 3, 2, 1, 0.3), max_steps=50)
        for a, b in zip(tr.records, tr.records[1:]):
            moved = {i for i, (x, y) in enumerate(zip(a.prices.as_tuple(), b.prices.as_tuple()),
                                                  start=1) if x != y}
            assert moved == {e.region for e in a.events}

    def test_unresolved_reports_max_steps(self):
        prices, params = PriceState(1.3, 1.3), ModelParams(3.6, 1.8, 0.5, 4.9, 0.5)
        tr = iterate(prices, params, max_steps=1)
        assert tr.classification.kind is SteadyKind.Unresolved
        assert tr.classification.max_steps == 1
        assert str(tr.classification) == "Unresolved{1}"
        assert iterate(prices, params).classification.kind is SteadyKind.L3

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            iterate(PriceState(1, 1), P_III, max_steps=0)
        with pytest.raises(ValueError):
            iterate(PriceState(1, 1), P_III, tol=0)


class TestClosedForms:
    def test_k(self):
        k = limit_k(PriceState(2, 1), P_II2)
        assert k == pytest.approx(K, abs=1e-12)
        assert abs(g_map(k, PriceState(2, 1), P_II2) - k) < 1e-12

    def test_k_increases_with_y1(self):
        k0 = limit_k(PriceState(2, 1), P_II2)
        k1 = limit_k(PriceState(2, 1), ModelParams(2.001, 4, 2, 3, 0.5))
        assert k1 > k0

    def test_g(self):
        assert g_map(0.0, PriceState(2, 1), P_II2) == 1
        assert g_map(1.3660254, PriceState(2, 1), P_II2) == pytest.approx(1.3660254, abs=1e-7)
        xs = np.linspace(0, 5, 50)
        gs = [g_map(float(x), PriceState(2, 1), P_II2) for x in xs]
        assert all(b > a for a, b in zip(gs, gs[1:]))
        with pytest.raises(ValueError):
            g_map(-1, PriceState(2, 1), P_II2)

    def test_p1_infinity(self):
        v = p1_infinity(P_II2)
        assert v == pytest.approx((5 + math.sqrt(33)) / 4, abs=1e-12)
        assert abs(v - p1_star(P_II2)) < 1e-12
        assert abs(h_map(v, P_II2) - v) < 1e-12


class TestSwitchSteps:
    PARAMS = ModelParams(2.2, 4.2, 3.1, 1.8, 0.91)
    P0 = PriceState(1.5, 1.8)

    def test_matches_direct_iteration(self):
        s = switch_steps(self.P0, self.PARAMS)
        x, n = self.P0.p1, 0
        while x > self.P0.p2 - self.PARAMS.rho:
            x, n = g_map(x, self.P0, self.PARAMS), n + 1
        assert s == n == 2

    def test_trajectory_switches_branch_at_s(self):
        s = switch_steps(self.P0, self.PARAMS)
        tr = iterate(self.P0, self.PARAMS, max_steps=50)
        branches = [r.equilibrium.branch for r in tr.records]
        first = branches.index(DeltaPBranch.LtMinusRho)
        assert first == s

    def test_one_step_case(self):
        params, p0 = ModelParams(4.3, 4.9, 4.8, 2.4, 0.18), PriceState(1.6, 1.6)
        assert switch_steps(p0, params) == 1

    def test_precondition(self):
        with pytest.raises(PreconditionViolated):
            switch_steps(PriceState(2, 1), P_II2)


def _random_states(n, seed):
    rng = np.random.default_rng(seed)
    for i in range(n):
        params = ModelParams(*rng.uniform(0.2, 5, 4), rng.uniform(0.05, 2))
        p1, p2 = rng.uniform(0.05, 4, 2)
        if i % 9 == 0:
            p2 = 0.0
        yield PriceState(p1, p2), params


def test_rules_exclusive_and_value_conserving():
    for prices, params in _random_states(3000, 21):
        new, eq, events = step(prices, params)
        assert len({e.region for e in events}) == len(events)
        for e in events:
            q = params.q1 if e.region == 1 else params.q2
            qc = eq.aggregates.q1_cons if e.region == 1 else eq.aggregates.q2_cons
            if e.direction is Direction.Down:
                assert e.new_price < e.old_price
                if e.new_price > 0:
                    assert e.new_price * q == pytest.approx(e.old_price * qc, rel=1e-12)
            else:
                assert e.new_price > e.old_price


def test_monotone_contraction_to_k():
    tr = iterate(PriceState(2, 1), P_II2, max_steps=200, tol=1e-300)
    p1 = tr.p1_series()
    strict = [b < a for a, b in zip(p1, p1[1:]) if abs(a - K) > 1e-14]
    assert all(strict)
    assert min(p1) >= K - 1e-12
    gaps = [x - K for x in p1[:6]]
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    assert max(ratios) < 0.5  # geometric contraction


def test_one_step_settlement_zone_i1():
    rng = np.random.default_rng(22)
    hits = 0
    for _ in range(20000):
        params = ModelParams(*rng.uniform(0.2, 5, 4), rng.uniform(0.05, 2))
        prices = PriceState(*rng.uniform(0.05, 4, 2))
        if prices.p2 * params.q2 >= prices.p1 * params.q1:
            continue
        if classify(prices, params) is not Zone.I_1 or abs(prices.p1 - prices.p2) > params.rho:
            continue
        tr = iterate(prices, params)
        assert tr.converged_at == 1
        assert tr.classification.kind is SteadyKind.TypeE
        hits += 1
    assert hits > 20


def test_degenerate_l1_price_drops_to_zero():
    # exactly on l1, region 2 cheaper by more than rho
    params = ModelParams(1, 1.5, 2, 0.5, 0.5)
    prices = PriceState(1, 2)
    assert abs(line_values(prices, params).l1) < 1e-12
    assert classify(prices, params) is Zone.II_2
    new, _, _ = step(prices, params)
    assert new.p2 == 0.0
    tr = iterate(prices, params, max_steps=500)
    assert tr.classification.kind is SteadyKind.DegenerateL1
    assert tr.classification.limit == pytest.approx(p1_infinity(params), abs=1e-12)
    assert tr.final_prices.p1 == pytest.approx(p1_infinity(params), abs=1e-8)


def test_zone_iv_mirrors_zone_ii():
    for prices, params in [(PriceState(2, 1), P_II2), (PriceState(2, 1), P_II3),
                           (PriceState(1.5, 1.8), ModelParams(2.2, 4.2, 3.1, 1.8, 0.91))]:
        a = iterate(prices, params, max_steps=300)
        b = iterate(prices.swapped(), params.swapped(), max_steps=300)
        # the relabelled start sits in zone IV: region 1 rich, region 2 not
        sp, sq = prices.swapped(), params.swapped()
        assert sq.Y1 >= sp.p1 * sq.q1 and sq.Y2 < sp.p2 * sq.q2
        assert solve_nash(sp, sq).swapped
        assert a.p1_series() == b.p2_series()
        assert a.p2_series() == b.p1_series()
        mirror = {SteadyKind.DegenerateL4: SteadyKind.DegenerateL3, SteadyKind.L4: SteadyKind.L3}
        assert b.classification.kind is mirror.get(a.classification.kind, a.classification.kind)
