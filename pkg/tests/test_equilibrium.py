import numpy as np
import pytest

from bitrade.equilibrium import (best_reply_1, best_reply_2, is_fixed_point, lemma_violations,
                                 solve_nash)
from bitrade.errors import DegeneratePrice, NoConvergence, OrientationViolated
from bitrade.model import EPS, ModelParams, PriceState, StrategyProfile, payoff1, payoff2
from bitrade.oracle import brute_force_nash
from bitrade.zones import Zone, classify

P_III = ModelParams(4, 6, 2, 3, 0.5)
P_II2 = ModelParams(2, 4, 2, 3, 0.5)
P_II3 = ModelParams(2, 6, 2, 3, 0.5)


class TestBestReplyExamples:
    def test_rich_buys_all_home(self):
        r = best_reply_1((0.0, 3.0), PriceState(1, 1), P_III)
        assert r.reply == (2, 0)
        assert "SR1" in r.selection_note

    def test_poor_spends_at_home(self):
        assert best_reply_1((0.0, 3.0), PriceState(2, 1), P_II2).reply == (1, 0)

    def test_free_home_goods(self):
        params = ModelParams(2, 4, 2, 3, 0.5)
        r = best_reply_1((0.0, 0.0), PriceState(0, 1), params)
        assert r.reply == pytest.approx((2, 2 / 1.5))

    def test_consumer_two(self):
        assert best_reply_2((2.0, 0.0), PriceState(1, 1), P_III).reply == (0, 3)
        r = best_reply_2((1.0, 0.0), PriceState(2, 1), P_II3)
        assert r.reply == pytest.approx((1, 3))
        assert "SR1" in r.selection_note

    def test_consumer_two_zero_price(self):
        assert best_reply_2((2.0, 0.0), PriceState(1, 0), P_II3).reply == pytest.approx((0, 3))

    def test_both_zero(self):
        with pytest.raises(DegeneratePrice):
            best_reply_1((0, 0), PriceState(0, 0), P_III)

    def test_raw_set_keeps_interval(self):
        r = best_reply_1((0.0, 3.0), PriceState(1, 1), P_III)
        assert len(r.raw_set) > 1 and r.reply in r.raw_set


class TestSolveExamples:
    def test_zone_iii(self):
        eq = solve_nash(PriceState(1, 1), P_III)
        assert eq.profile.as_tuple() == (2, 0, 0, 3)
        assert eq.zone is Zone.III

    def test_zone_ii3(self):
        eq = solve_nash(PriceState(2, 1), P_II3)
        assert eq.zone is Zone.II_3
        assert eq.profile.as_tuple() == pytest.approx((1, 0, 1, 3))

    def test_zone_ii2(self):
        eq = solve_nash(PriceState(2, 1), P_II2)
        assert eq.zone is Zone.II_2
        assert eq.profile.as_tuple() == pytest.approx((1, 0, 0.4, 3))

    def test_swapped_economy(self):
        prices, params = PriceState(1, 2), ModelParams(4, 2, 3, 2, 0.5)
        eq = solve_nash(prices, params)
        assert eq.swapped
        assert eq.profile.as_tuple() == pytest.approx((3, 0.4, 0, 1))

    def test_degenerate_p2_zero(self):
        eq = solve_nash(PriceState(2, 0), P_II2)
        assert eq.degenerate
        assert eq.profile.delta == P_II2.q2
        assert is_fixed_point(eq.profile, PriceState(2, 0), P_II2)

    def test_degenerate_p1_zero_mirrors(self):
        eq = solve_nash(PriceState(0, 2), P_II2.swapped())
        ref = solve_nash(PriceState(2, 0), P_II2)
        assert eq.profile.as_tuple() == pytest.approx(ref.profile.swapped().as_tuple())


def _random_instances(n, seed, zero_prices=True):
    rng = np.random.default_rng(seed)
    for i in range(n):
        params = ModelParams(*rng.uniform(0.2, 5, 4), rng.uniform(0.05, 2))
        p1, p2 = rng.uniform(0.05, 4, 2)
        if zero_prices and i % 10 == 0:
            p1 = 0.0
        elif zero_prices and i % 10 == 1:
            p2 = 0.0
        yield PriceState(p1, p2), params, rng


def test_best_reply_dominates_random_strategies():
    for prices, params, rng in _random_instances(1000, 11):
        g, d = rng.uniform(0, 1.5 * params.q1), rng.uniform(0, 1.5 * params.q2)
        a, b = best_reply_1((g, d), prices, params).reply
        p2p = prices.p2 + params.rho
        assert a * prices.p1 + b * p2p <= params.Y1 + EPS
        best = payoff1(StrategyProfile(a, b, g, d), params)
        # random points of consumer I's budget set
        spend = params.Y1 * rng.uniform(0, 1, 1000)
        share = rng.uniform(0, 1, 1000)
        home_cap = 3 * params.q1 if prices.p1 == 0 else None
        alpha = home_cap * share if home_cap else share * spend / prices.p1
        beta = (1 - share) * spend / p2p
        pays = np.minimum(alpha, params.q1) + np.minimum(beta, max(0.0, params.q2 - d))
        assert pays.max() <= best + EPS


def test_best_reply_2_dominates_random_strategies():
    for prices, params, rng in _random_instances(1000, 12):
        a, b = rng.uniform(0, 1.5 * params.q1), rng.uniform(0, 1.5 * params.q2)
        g, d = best_reply_2((a, b), prices, params).reply
        p1p = prices.p1 + params.rho
        assert g * p1p + d * prices.p2 <= params.Y2 + EPS
        best = payoff2(StrategyProfile(a, b, g, d), params)
        spend = params.Y2 * rng.uniform(0, 1, 1000)
        share = rng.uniform(0, 1, 1000)
        delta = 3 * params.q2 * share if prices.p2 == 0 else share * spend / prices.p2
        gamma = (1 - share) * spend / p1p
        pays = np.minimum(delta, params.q2) + np.minimum(gamma, max(0.0, params.q1 - a))
        assert pays.max() <= best + EPS


def test_fixed_point_and_lemmas_random():
    for prices, params, _ in _random_instances(5000, 13):
        eq = solve_nash(prices, params)
        assert is_fixed_point(eq.profile, prices, params), (prices, params)
        assert lemma_violations(eq.profile, prices, params, eps=EPS) == []


def test_lemma_checker_detects_violation():
    bad = StrategyProfile(0.5, 0, 0, 3)  # consumer I neither buys q1 nor spends Y1
    assert any("consumer I" in v for v in lemma_violations(bad, PriceState(1, 1), P_III))


class TestOracle:
    def test_zone_iii(self):
        o = brute_force_nash(PriceState(1, 1), P_III, 200)
        assert (o.payoff1, o.payoff2) == pytest.approx((2, 3), abs=0.02)

    def test_zone_ii2(self):
        o = brute_force_nash(PriceState(2, 1), P_II2, 200)
        assert o.payoff1 == pytest.approx(1.0, abs=0.02)

    def test_degenerate(self):
        # consumer I clears region 1, so consumer II is left with its free home goods
        o = brute_force_nash(PriceState(1, 0), P_III, 200)
        assert o.payoff2 == pytest.approx(P_III.q2, abs=0.02)
        # with region 1 leftovers, consumer II also imports them
        o = brute_force_nash(PriceState(2, 0), P_II2, 200)
        eq = solve_nash(PriceState(2, 0), P_II2)
        assert o.payoff2 == pytest.approx(payoff2(eq.profile, P_II2), abs=o.bound)

    def test_grid_size_check(self):
        with pytest.raises(ValueError):
            brute_force_nash(PriceState(1, 1), P_III, 10)

    def test_sweep_limit(self):
        with pytest.raises(NoConvergence):
            brute_force_nash(PriceState(2, 1), P_II2, 200, max_sweeps=0)

    def test_matches_closed_form(self):
        for prices, params, _ in _random_instances(100, 14, zero_prices=False):
            eq = solve_nash(prices, params)
            o = brute_force_nash(prices, params, 200)
            assert abs(payoff1(eq.profile, params) - o.payoff1) <= o.bound
            assert abs(payoff2(eq.profile, params) - o.payoff2) <= o.bound


def test_orientation_not_raised_by_solver():
    # the solver relabels internally; classify would refuse this state
    eq = solve_nash(PriceState(1, 1), ModelParams(1, 1, 2, 3, 0.5))
    assert eq.swapped
    with pytest.raises(OrientationViolated):
        classify(PriceState(1, 1), ModelParams(1, 1, 2, 3, 0.5))
