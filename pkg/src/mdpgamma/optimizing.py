"""The fixed-γ "optimizing MDP" of an MDP-Γ and the value-utility gap identities.

Given the optimal policy π* with utilities u* and action utilities
Q*(s, a) = ℛ(s, a) + Γ(s, a)·E[u*(s')], the reward

    R(s, a) = Q*(s, a) - γ·E[u*(s')]

is the only one under which π* is optimal in a γ-discounted MDP with
V* = u* and Q* unchanged. Suboptimal policies keep an exact linear
relation between their utility u^π and their value v^π in that MDP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StochasticPolicy
from .evaluation import backup, evaluate_policy, policy_weights, successor_matrix
from .model import FixedGammaMDP, MDPGamma, StationaryPolicy, UtilityVector
from .planning import PlanResult, policy_iteration


def _check_gamma(gamma):
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma!r}")


def optimizing_rewards(model: MDPGamma, gamma: float, plan: PlanResult | None = None) -> dict:
    """R(s, a) = Q*(s, a) - γ·E_{s'~T(s,a)}[u*(s')] for every available pair."""
    _check_gamma(gamma)
    plan = plan if plan is not None else policy_iteration(model)
    u_star = plan.utilities.values
    cm = model.compiled
    q_star = backup(model, u_star)
    rewards = q_star - gamma * (cm.transition @ u_star)
    return {pair: float(r) for pair, r in zip(cm.pairs, rewards)}


def construct_optimizing_mdp(model: MDPGamma, gamma: float, plan: PlanResult | None = None) -> FixedGammaMDP:
    return FixedGammaMDP(model.sdp, optimizing_rewards(model, gamma, plan), float(gamma))


def mdp_value(mdp: FixedGammaMDP, policy: StationaryPolicy) -> UtilityVector:
    """Classical discounted value: solves v = r^π + γ T^π v."""
    lifted = mdp.lift()
    cm = lifted.compiled
    w = policy_weights(lifted, policy)
    n = len(cm.states)
    t_pi = np.zeros((n, n))
    r_pi = np.zeros(n)
    np.add.at(t_pi, cm.pair_state, w[:, None] * cm.transition)
    np.add.at(r_pi, cm.pair_state, w * cm.reward)
    v = np.linalg.solve(np.eye(n) - mdp.gamma * t_pi, r_pi)
    return UtilityVector(cm.states, v)


def solve_fixed_gamma(mdp: FixedGammaMDP) -> PlanResult:
    """Optimal policy and value of a classical MDP (policy iteration on its Γ ≡ γ lift)."""
    return policy_iteration(mdp.lift())


def deterministic_factors(model: MDPGamma, policy: StationaryPolicy):
    """(Γ^π diagonal, T^π) for a deterministic policy."""
    if not policy.is_deterministic:
        raise StochasticPolicy("value-utility identities need a deterministic policy")
    cm = model.compiled
    w = policy_weights(model, policy)
    ks = np.flatnonzero(w > 0)
    order = np.argsort(cm.pair_state[ks])
    ks = ks[order]
    return cm.gamma[ks].copy(), cm.transition[ks].copy()


@dataclass(frozen=True)
class GapReport:
    gamma: float
    u_pi: UtilityVector
    v_pi: UtilityVector
    v_star: UtilityVector
    u_star: UtilityVector
    epsilon_diag: np.ndarray
    identity1_residual: float
    identity2_residual: float
    successor: np.ndarray
    transition: np.ndarray
    identity1_rhs: np.ndarray
    identity2_rhs: np.ndarray

    @property
    def regret(self) -> np.ndarray:
        """v* - v^π, entrywise nonnegative because π* is optimal in the optimizing MDP."""
        return self.v_star.values - self.v_pi.values


def value_utility_gap(model: MDPGamma, gamma: float, policy: StationaryPolicy,
                      plan: PlanResult | None = None) -> GapReport:
    """Evaluate both value-utility identities for ``policy`` against its direct utility.

        u^π = u* - (I - Γ^π T^π)^{-1} (I - γ T^π)(v* - v^π)
            = v^π - (I - Γ^π T^π)^{-1} ε^π T^π (v* - v^π),   ε^π = Γ^π - γI
    """
    _check_gamma(gamma)
    gamma_diag, t_pi = deterministic_factors(model, policy)
    plan = plan if plan is not None else policy_iteration(model)
    opt = construct_optimizing_mdp(model, gamma, plan)

    u_pi = evaluate_policy(model, policy)
    succ = successor_matrix(model, policy)
    v_pi = mdp_value(opt, policy)
    v_star = mdp_value(opt, plan.policy)
    u_star = plan.utilities

    n = model.n
    regret = v_star.values - v_pi.values
    eps = gamma_diag - gamma
    rhs1 = u_star.values - succ @ ((np.eye(n) - gamma * t_pi) @ regret)
    rhs2 = v_pi.values - succ @ (eps * (t_pi @ regret))
    return GapReport(
        gamma=float(gamma),
        u_pi=u_pi,
        v_pi=v_pi,
        v_star=v_star,
        u_star=u_star,
        epsilon_diag=eps,
        identity1_residual=float(np.max(np.abs(u_pi.values - rhs1))),
        identity2_residual=float(np.max(np.abs(u_pi.values - rhs2))),
        successor=np.asarray(succ),
        transition=t_pi,
        identity1_rhs=rhs1,
        identity2_rhs=rhs2,
    )
