"""Random MDP-Γ instances for property tests and the ``gap --selftest`` command."""

from __future__ import annotations

import numpy as np

from .errors import InadmissiblePolicy
from .model import FiniteSDP, FixedGammaMDP, Lottery, MDPGamma, StationaryPolicy
from .planning import policy_iteration


def _lottery(rng, outcomes, max_support):
    k = int(rng.integers(1, min(max_support, len(outcomes)) + 1))
    chosen = rng.choice(len(outcomes), size=k, replace=False)
    probs = rng.dirichlet(np.ones(k))
    # Dirichlet draws can underflow to exactly zero; nudge and renormalise
    probs = np.maximum(probs, 1e-6)
    probs /= probs.sum()
    probs[-1] = 1.0 - probs[:-1].sum()
    return Lottery(tuple((outcomes[i], float(p)) for i, p in zip(chosen, probs)))


def random_sdp(rng, n_states: int, n_actions: int = 3, max_support: int = 3) -> FiniteSDP:
    states = [f"s{i}" for i in range(n_states)]
    actions = [f"a{j}" for j in range(n_actions)]
    available = {}
    for s in states:
        k = int(rng.integers(1, n_actions + 1))
        idx = sorted(rng.choice(n_actions, size=k, replace=False))
        available[s] = [actions[j] for j in idx]
    transition = {(s, a): _lottery(rng, states, max_support) for s in states for a in available[s]}
    return FiniteSDP(states, actions, available, transition, Lottery.uniform(states))


def random_model(rng, n_states: int, n_actions: int = 3, gamma_range=(0.0, 0.95),
                 big_gamma_prob: float = 0.0, big_gamma_range=(1.0, 1.3),
                 reward_scale: float = 10.0) -> MDPGamma:
    """Random MDP-Γ; each Γ(s,a) is drawn from ``big_gamma_range`` with ``big_gamma_prob``."""
    sdp = random_sdp(rng, n_states, n_actions)
    pairs = list(sdp.transition)
    reward = {p: float(rng.uniform(-reward_scale, reward_scale)) for p in pairs}
    gamma = {}
    for p in pairs:
        lo, hi = big_gamma_range if rng.random() < big_gamma_prob else gamma_range
        gamma[p] = float(rng.uniform(lo, hi))
    return MDPGamma(sdp, reward, gamma)


def random_fixed_gamma_mdp(rng, n_states: int, gamma: float, n_actions: int = 3) -> FixedGammaMDP:
    sdp = random_sdp(rng, n_states, n_actions)
    reward = {p: float(rng.uniform(-10, 10)) for p in sdp.transition}
    return FixedGammaMDP(sdp, reward, gamma)


def random_deterministic_policy(rng, model: MDPGamma) -> StationaryPolicy:
    return StationaryPolicy.deterministic(
        {s: model.available(s)[int(rng.integers(len(model.available(s))))] for s in model.states}
    )


def random_stochastic_policy(rng, model: MDPGamma) -> StationaryPolicy:
    return StationaryPolicy({s: _lottery(rng, list(model.available(s)), 3) for s in model.states})


def random_planned_instance(rng, n_states: int, big_gamma_prob: float = 0.1, max_tries: int = 1000):
    """A random model on which policy iteration succeeds, with its plan.

    Draws with Γ > 1 can make some policies inadmissible; those draws are
    rejected and redrawn.
    """
    for _ in range(max_tries):
        model = random_model(rng, n_states, big_gamma_prob=big_gamma_prob)
        try:
            return model, policy_iteration(model)
        except InadmissiblePolicy:
            continue
    raise RuntimeError("could not draw a plannable instance")
