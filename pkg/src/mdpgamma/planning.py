"""Optimal stationary policies for MDP-Γ models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CycleDetected, InadmissiblePolicy, NoConvergence
from .evaluation import backup, evaluate_policy
from .model import MDPGamma, StationaryPolicy, UtilityVector

TIE_TOL = 1e-12
DIVERGENCE_SENTINEL = 1e12


@dataclass(frozen=True)
class PlanResult:
    policy: StationaryPolicy
    utilities: UtilityVector
    iterations: int
    visited_inadmissible: list = field(default_factory=list)
    history: tuple = ()  # utility vectors of every evaluated policy, in order


@dataclass(frozen=True)
class ValueIterationResult(UtilityVector):
    iterations: int = 0


def _best_actions(model: MDPGamma, q: np.ndarray) -> dict:
    cm = model.compiled
    choice = {}
    for s in cm.states:
        ks = [cm.pair_index[(s, a)] for a in cm.available[s]]
        vals = q[ks]
        top = vals.max()
        # lowest declared action index among (numerically) tied maximisers
        tol = TIE_TOL * max(1.0, abs(top))
        choice[s] = cm.available[s][int(np.flatnonzero(vals >= top - tol)[0])]
    return choice


def greedy_policy(model: MDPGamma, u) -> StationaryPolicy:
    """Deterministic policy maximising ℛ(s,a) + Γ(s,a)·E[u(s')] at every state."""
    values = np.asarray(u, dtype=float)
    return StationaryPolicy.deterministic(_best_actions(model, backup(model, values)))


def default_policy(model: MDPGamma) -> StationaryPolicy:
    return StationaryPolicy.deterministic({s: model.available(s)[0] for s in model.states})


def count_deterministic_policies(model: MDPGamma) -> int:
    return math.prod(len(model.available(s)) for s in model.states)


def policy_iteration(model: MDPGamma, init: StationaryPolicy | None = None) -> PlanResult:
    """Exact policy iteration over deterministic stationary policies.

    Aborts with :class:`InadmissiblePolicy` as soon as a visited policy has
    spectral radius at or above the admissibility threshold; the exception
    carries the offending policy.
    """
    policy = init if init is not None else default_policy(model)
    cap = count_deterministic_policies(model)
    seen = set()
    history = []
    for iteration in range(1, cap + 2):
        key = tuple(sorted(policy.as_actions().items()))
        if key in seen:
            raise CycleDetected(f"policy {policy.label(model.states)} revisited", policy=policy)
        seen.add(key)
        u = evaluate_policy(model, policy)
        history.append(u)
        improved = greedy_policy(model, u.values)
        if improved.as_actions() == policy.as_actions():
            return PlanResult(policy, u, iteration, [], tuple(history))
        policy = improved
    raise CycleDetected("policy iteration exceeded the number of deterministic policies", policy=policy)


def value_iteration(model: MDPGamma, tol: float = 1e-10, max_iter: int = 100_000) -> ValueIterationResult:
    """Iterate u <- max_a [ℛ + Γ·E u] from zero until the max-norm change drops below ``tol``."""
    cm = model.compiled
    u = np.zeros(model.n)
    for it in range(1, max_iter + 1):
        q = backup(model, u)
        nxt = np.full(model.n, -np.inf)
        np.maximum.at(nxt, cm.pair_state, q)
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > DIVERGENCE_SENTINEL:
            raise NoConvergence("value iteration diverged", estimate=nxt, iterations=it)
        change = np.max(np.abs(nxt - u))
        u = nxt
        if change < tol:
            break
    else:
        raise NoConvergence("value iteration hit the iteration cap", estimate=u, iterations=max_iter)

    policy = greedy_policy(model, u)
    try:
        ok, _ = verify_optimal(model, policy, tol=max(1e-6, 1e3 * tol))
    except InadmissiblePolicy as exc:
        raise NoConvergence("greedy policy of the value-iteration fixed point is inadmissible",
                            estimate=u, iterations=it) from exc
    if not ok:
        raise NoConvergence("greedy policy fails the optimality check", estimate=u, iterations=it)
    return ValueIterationResult(model.states, u, iterations=it)


def verify_optimal(model: MDPGamma, policy: StationaryPolicy, tol: float = 1e-9):
    """Bellman optimality check: no available action beats the policy's own utility.

    Returns ``(ok, violation)`` where ``violation[s] = max(0, max_a Q(s,a) - u(s))``.
    """
    cm = model.compiled
    u = evaluate_policy(model, policy)
    q = backup(model, u.values)
    best = np.full(model.n, -np.inf)
    np.maximum.at(best, cm.pair_state, q)
    violation = np.maximum(best - u.values, 0.0)
    ok = bool(np.all(violation <= tol))
    return ok, UtilityVector(model.states, violation)
