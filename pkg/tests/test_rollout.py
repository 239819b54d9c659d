import numpy as np
import pytest

from conftest import DOWN, HH, MIDDLE, STAY, det
from mdpgamma import (
    MDPGamma,
    estimate_utility,
    evaluate_policy,
    load_fixture,
    policy_matrices,
    sample_return,
    spectral_radius,
)
from mdpgamma.evaluation import admissibility
from mdpgamma.philox import philox4x32, split_seed, uniforms
from mdpgamma.randomized import random_deterministic_policy, random_model, random_stochastic_policy
from mdpgamma.rollout import DEFAULT_TAIL_TOL, SubStream


@pytest.mark.parametrize(
    "counter, key, expected",
    [
        ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
        ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
        (
            (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
            (0xA4093822, 0x299F31D0),
            (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
        ),
    ],
)
def test_philox_known_answers(counter, key, expected):
    assert tuple(int(w) for w in philox4x32(counter, key)) == expected


def test_uniforms_are_unit_interval_and_pure():
    idx = np.arange(10_000, dtype=np.uint64)
    a, b = uniforms(7, idx, 3)
    assert a.min() >= 0 and a.max() < 1 and b.min() >= 0 and b.max() < 1
    assert abs(a.mean() - 0.5) < 0.02
    a2, _ = uniforms(7, idx[::-1], 3)
    np.testing.assert_array_equal(a2[::-1], a)


def test_seed_range():
    with pytest.raises(ValueError):
        split_seed(-1)
    with pytest.raises(ValueError):
        split_seed(2**64)
    assert split_seed(2**64 - 1) == (0xFFFFFFFF, 0xFFFFFFFF)


class TestSampleReturn:
    def test_stay_from_low(self, cliff):
        for seed in (0, 1, 99):
            value, truncated = sample_return(cliff, STAY, "L", SubStream(seed, 0))
            assert value == pytest.approx(100, abs=1e-8)
            assert not truncated

    def test_zero_gamma(self, cliff):
        flat = MDPGamma(cliff.sdp, cliff.reward, {k: 0.0 for k in cliff.gamma_fn})
        value, truncated = sample_return(flat, STAY, "H", SubStream(3, 5), horizon=1)
        assert value == 25 and not truncated

    def test_horizon_truncates(self, cliff):
        value, truncated = sample_return(cliff, STAY, "L", SubStream(0, 0), horizon=3)
        assert truncated
        assert value == pytest.approx(10 + 9 + 8.1)

    def test_slippery_hand_unrolled(self, slippery):
        # while the agent stays high it collects 25·1.2^t; once it slips to M at step k the
        # deterministic rest is worth 80, discounted by 1.2^k
        rho = spectral_radius(policy_matrices(slippery, HH).m).spectral_radius
        bound = 25 / (1 - rho)
        for index in range(20):
            stream = SubStream(11, index)
            total, d = 0.0, 1.0
            for t in range(1000):
                total += d * 25
                d *= 1.2
                _, u_next = stream.step(t)
                if u_next < 0.5:  # slip to M
                    break
            # the tail after the slip runs through the same simulator rules
            tail, _ = sample_return(slippery, HH, "M", SubStream(11, index))
            value, _ = sample_return(slippery, HH, "H", stream)
            assert value == pytest.approx(total + d * 80, rel=1e-9)
            assert tail == pytest.approx(80, abs=1e-8)
            assert bound > 0


class TestEstimate:
    def test_down_single_sample(self, cliff):
        est = estimate_utility(cliff, DOWN, "H", samples=1)
        assert est.mean == pytest.approx(70, abs=DEFAULT_TAIL_TOL) and est.std_error == 0

    def test_deterministic_dynamics_single_sample(self, cliff):
        for policy in (DOWN, STAY, MIDDLE, HH):
            u = evaluate_policy(cliff, policy)
            for s in cliff.states:
                assert estimate_utility(cliff, policy, s, samples=1).mean == pytest.approx(u[s], abs=1e-8)

    def test_repeatable(self, slippery):
        a = estimate_utility(slippery, HH, "H", samples=5000, seed=42)
        b = estimate_utility(slippery, HH, "H", samples=5000, seed=42)
        assert a == b

    def test_seed_matters(self, slippery):
        a = estimate_utility(slippery, HH, "H", samples=2000, seed=1)
        b = estimate_utility(slippery, HH, "H", samples=2000, seed=2)
        assert a.mean != b.mean

    def test_shard_independent(self, slippery, monkeypatch):
        import mdpgamma.rollout as rollout

        monkeypatch.setattr(rollout, "BATCH", 777)
        ref = estimate_utility(slippery, HH, "H", samples=5000, seed=9)
        for shards in (2, 5):
            assert estimate_utility(slippery, HH, "H", samples=5000, seed=9, shards=shards) == ref
        monkeypatch.setattr(rollout, "BATCH", 1 << 16)
        assert estimate_utility(slippery, HH, "H", samples=5000, seed=9) == ref

    def test_initial_lottery_start(self, slippery):
        a = estimate_utility(slippery, HH, None, samples=3000, seed=4)
        b = estimate_utility(slippery, HH, "H", samples=3000, seed=4)
        assert a.mean == b.mean  # the Cliff initial lottery is degenerate on H

    def test_slippery(self, slippery):
        est = estimate_utility(slippery, HH, "H", samples=20_000, seed=5)
        assert abs(est.mean - 182.5) <= 3 * est.std_error
        assert est.truncated_fraction < 0.01

    def test_truncation_vanishes(self, slippery):
        fractions = [estimate_utility(slippery, HH, "H", samples=4000, horizon=h, seed=3).truncated_fraction
                     for h in (5, 20, 80, 400)]
        assert fractions[0] > fractions[-1]
        assert all(a >= b for a, b in zip(fractions, fractions[1:]))
        assert fractions[-1] == 0

    def test_rejects_bad_arguments(self, cliff):
        with pytest.raises(ValueError):
            estimate_utility(cliff, DOWN, "H", samples=0)
        with pytest.raises(ValueError):
            estimate_utility(cliff, DOWN, "H", horizon=0)


def _oracle_cases(rng):
    cases = []
    for name in ("cliff", "cliff_slippery", "cliff_fixed_gamma", "single_state"):
        model = load_fixture(name)
        for acts in ([{"S": "A"}] if name == "single_state" else [DOWN, STAY, MIDDLE, HH]):
            policy = det(**acts) if isinstance(acts, dict) else acts
            if admissibility(model, policy).admissible:
                cases.append((model, policy))
    target = len(cases) + 6
    while len(cases) < target:
        model = random_model(rng, 4, big_gamma_prob=0.1)
        policy = random_stochastic_policy(rng, model) if rng.random() < 0.5 else random_deterministic_policy(rng, model)
        if spectral_radius(policy_matrices(model, policy).m).spectral_radius < 0.9:
            cases.append((model, policy))
    return cases


def test_oracle_agreement(rng):
    for k, (model, policy) in enumerate(_oracle_cases(rng)):
        u = evaluate_policy(model, policy)
        for s in model.states:
            est = estimate_utility(model, policy, s, samples=50_000, horizon=512, seed=1000 + k)
            assert abs(est.mean - u[s]) <= max(3 * est.std_error, 1e-6), (k, s, est, u[s])
            assert est.truncated_fraction < 0.01


def test_default_tail_tolerance():
    assert DEFAULT_TAIL_TOL == 1e-10
