import numpy as np
import pytest

from conftest import DOWN, HH, MIDDLE, STAY
from mdpgamma import (
    construct_optimizing_mdp,
    gamma_sweep,
    implied_fixed_gamma_rewards,
    load_fixture,
    policy_iteration,
    representability_check,
)
from mdpgamma.errors import PolicyListTooLarge
from mdpgamma.fixed_gamma import enumerate_policies
from mdpgamma.randomized import random_fixed_gamma_mdp, random_planned_instance

FOUR = {"stay": STAY, "down": DOWN, "middle": MIDDLE, "high": HH}


class TestImpliedRewards:
    def test_cliff_09(self, cliff):
        r = implied_fixed_gamma_rewards(cliff, 0.9)
        assert r[("M", "MM")] == pytest.approx(-2, abs=1e-10)
        assert r[("H", "HH")] == pytest.approx(-3, abs=1e-10)

    def test_cliff_0(self, cliff):
        r = implied_fixed_gamma_rewards(cliff, 0.0)
        assert r[("M", "MM")] == pytest.approx(70, abs=1e-10)
        assert r[("H", "HH")] == pytest.approx(60, abs=1e-10)

    @pytest.mark.parametrize("gamma", np.linspace(0, 0.99, 12))
    def test_supplement_difference(self, cliff, gamma):
        r = implied_fixed_gamma_rewards(cliff, gamma)
        assert r[("M", "MM")] - r[("H", "HH")] == pytest.approx(10 * (1 - gamma), abs=1e-10)

    def test_fixed_gamma_model_returns_its_rewards(self, rng):
        for _ in range(10):
            gamma = float(rng.uniform(0, 0.95))
            mdp = random_fixed_gamma_mdp(rng, 4, gamma)
            r = implied_fixed_gamma_rewards(mdp.lift(), gamma)
            for pair, value in mdp.reward.items():
                assert r[pair] == pytest.approx(value, abs=1e-9)

    def test_matches_optimizing_mdp(self, rng):
        for _ in range(10):
            model, plan = random_planned_instance(rng, 4)
            gamma = float(rng.uniform(0, 0.99))
            assert implied_fixed_gamma_rewards(model, gamma, plan) == construct_optimizing_mdp(model, gamma, plan).reward


class TestRepresentability:
    def test_cliff_reversal(self, cliff):
        rep = representability_check(cliff, 0.9, FOUR)
        assert not rep.representable
        assert rep.v["stay"]["H"] == pytest.approx(-30, abs=1e-9)
        assert rep.v["stay"]["M"] == pytest.approx(-20, abs=1e-9)
        flagged = {(c.first, c.second, c.where) for c in rep.reversals}
        assert ("stay", "middle", "H") in flagged
        assert ("middle", "high", "H") in flagged

    def test_reversal_flags_are_consistent(self, cliff):
        rep = representability_check(cliff, 0.5)
        for c in rep.policy_pairs:
            assert c.reversed == (c.u_order != 0 and c.v_order == -c.u_order)

    def test_initial_lottery_row(self, cliff):
        rep = representability_check(cliff, 0.9, FOUR)
        t0 = [c for c in rep.reversals if c.where == "T0"]
        # T0 is degenerate on H, so it repeats the H comparisons
        assert {(c.first, c.second) for c in t0} == {
            (c.first, c.second) for c in rep.reversals if c.where == "H"
        }

    def test_persists_at_half(self, cliff):
        rep = representability_check(cliff, 0.5)
        assert rep.reversals
        r = rep.implied_rewards
        assert r[("M", "MM")] - r[("H", "HH")] == pytest.approx(5)

    def test_fixed_gamma_representable(self, rng):
        for _ in range(10):
            gamma = float(rng.uniform(0, 0.95))
            model = random_fixed_gamma_mdp(rng, 4, gamma).lift()
            rep = representability_check(model, gamma)
            assert rep.representable
            assert rep.reversals == []

    def test_fixture_at_07(self):
        rep = representability_check(load_fixture("cliff_fixed_gamma"), 0.7)
        assert rep.representable and not rep.reversals

    def test_optimal_policy_u_equals_v(self, rng, cliff, slippery):
        cases = [(cliff, policy_iteration(cliff)), (slippery, policy_iteration(slippery))]
        cases += [random_planned_instance(rng, 5) for _ in range(10)]
        for model, plan in cases:
            gamma = float(rng.uniform(0, 0.99))
            rep = representability_check(model, gamma, [plan.policy], plan)
            (key,) = rep.policy_ids
            np.testing.assert_allclose(rep.u[key].values, rep.v[key].values, atol=1e-8)

    def test_ties_are_not_reversals(self, cliff):
        rep = representability_check(cliff, 0.9, {"a": DOWN, "b": DOWN})
        assert all(c.u_order == 0 and c.v_order == 0 for c in rep.policy_pairs)


def test_enumeration(cliff):
    pols = enumerate_policies(cliff)
    assert len(pols) == 4
    assert list(pols)[0] == "L:LL,M:ML,H:HM"


def test_enumeration_cap(cliff):
    with pytest.raises(PolicyListTooLarge):
        enumerate_policies(cliff, limit=3)


class TestSweep:
    def test_cliff_every_point(self, cliff):
        reports = gamma_sweep(cliff, np.linspace(0, 0.99, 25))
        assert len(reports) == 25
        assert all(r.reversals and not r.representable for r in reports)

    def test_fixed_gamma_point(self):
        reports = gamma_sweep(load_fixture("cliff_fixed_gamma"), [0.3, 0.7])
        assert [r.representable for r in reports] == [False, True]

    def test_empty(self, cliff):
        assert gamma_sweep(cliff, []) == []

    def test_workers_agree(self, cliff):
        grid = [0.1, 0.4, 0.8]
        a = gamma_sweep(cliff, grid)
        b = gamma_sweep(cliff, grid, workers=3)
        assert [r.policy_pairs for r in a] == [r.policy_pairs for r in b]
