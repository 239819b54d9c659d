"""Can a fixed-γ MDP reproduce an MDP-Γ's preferences?

For each γ the only candidate reward is the one that makes the optimal
policy satisfy the γ-discounted Bellman equation. We evaluate a set of
policies under both the true utilities u and the implied values v and
report every pair whose order flips.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import PolicyListTooLarge
from .evaluation import evaluate_policy
from .model import MDPGamma, StationaryPolicy, lottery_expectation
from .optimizing import construct_optimizing_mdp, mdp_value, optimizing_rewards
from .planning import PlanResult, count_deterministic_policies, policy_iteration

ORDER_TOL = 1e-9
REPRESENT_TOL = 1e-8
MAX_ENUMERATED = 4096
INITIAL = "T0"


@dataclass(frozen=True)
class OrderComparison:
    first: str
    second: str
    where: str  # state name, or "T0" for the initial-lottery comparison
    u_order: int
    v_order: int
    reversed: bool


@dataclass(frozen=True)
class ReversalReport:
    gamma: float
    implied_rewards: dict
    policy_ids: tuple
    u: dict
    v: dict
    policy_pairs: tuple
    representable: bool

    @property
    def reversals(self) -> list:
        return [c for c in self.policy_pairs if c.reversed]


def implied_fixed_gamma_rewards(model: MDPGamma, gamma: float, plan: PlanResult | None = None) -> dict:
    return optimizing_rewards(model, gamma, plan)


def enumerate_policies(model: MDPGamma, limit: int = MAX_ENUMERATED) -> dict:
    """All deterministic stationary policies keyed by label, in declared action order."""
    total = count_deterministic_policies(model)
    if total > limit:
        raise PolicyListTooLarge(f"{total} deterministic policies exceed the limit of {limit}")
    out = {}
    for combo in itertools.product(*(model.available(s) for s in model.states)):
        pol = StationaryPolicy.deterministic(dict(zip(model.states, combo)))
        out[pol.label(model.states)] = pol
    return out


def _sign(a: float, b: float) -> int:
    if abs(a - b) <= ORDER_TOL:
        return 0
    return 1 if a > b else -1


def _named(model, policies) -> dict:
    if policies is None:
        return enumerate_policies(model)
    if isinstance(policies, Mapping):
        return dict(policies)
    return {p.label(model.states): p for p in policies}


def representability_check(model: MDPGamma, gamma: float,
                           policies: Mapping | Sequence | None = None,
                           plan: PlanResult | None = None) -> ReversalReport:
    plan = plan if plan is not None else policy_iteration(model)
    named = _named(model, policies)
    opt = construct_optimizing_mdp(model, gamma, plan)
    initial = model.sdp.initial

    u = {k: evaluate_policy(model, p) for k, p in named.items()}
    v = {k: mdp_value(opt, p) for k, p in named.items()}

    comparisons = []
    ids = list(named)
    for a, b in itertools.combinations(ids, 2):
        spots = [(s, u[a][s], u[b][s], v[a][s], v[b][s]) for s in model.states]
        spots.append((INITIAL,
                      lottery_expectation(initial, u[a]), lottery_expectation(initial, u[b]),
                      lottery_expectation(initial, v[a]), lottery_expectation(initial, v[b])))
        for where, ua, ub, va, vb in spots:
            su, sv = _sign(ua, ub), _sign(va, vb)
            comparisons.append(OrderComparison(a, b, where, su, sv, su != 0 and sv == -su))

    representable = all(
        abs(u[k][s] - v[k][s]) <= REPRESENT_TOL for k in ids for s in model.states
    )
    return ReversalReport(
        gamma=float(gamma),
        implied_rewards=dict(opt.reward),
        policy_ids=tuple(ids),
        u=u,
        v=v,
        policy_pairs=tuple(comparisons),
        representable=representable,
    )


def gamma_sweep(model: MDPGamma, grid: Sequence[float], policies=None, workers: int = 1) -> list:
    """One :class:`ReversalReport` per grid point, in grid order."""
    grid = list(grid)
    if not grid:
        return []
    plan = policy_iteration(model)
    named = _named(model, policies)

    def one(g):
        return representability_check(model, g, named, plan)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, grid))
    return [one(g) for g in grid]
