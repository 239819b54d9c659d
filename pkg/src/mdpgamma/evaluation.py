"""Policy evaluation for MDP-Γ models.

Utilities satisfy the affine recursion ``u = r + M u`` where
``M[i, j] = Σ_a π(a|s_i) Γ(s_i, a) T(s_i, a)(s_j)``. A policy is admissible
when the spectral radius of ``M`` is below one, in which case
``(I - M)^{-1} = I + M + M² + ...`` exists and is entrywise nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InadmissiblePolicy, NoConvergence, PolicyInvalid, Singular
from .model import (
    Lottery,
    MDPGamma,
    PrefixPolicy,
    StationaryPolicy,
    UtilityVector,
    lottery_expectation,
)

ADMISSIBILITY_MARGIN = 1e-9
POWER_TOL = 1e-10
ITERATIVE_TOL = 1e-10
ITERATIVE_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class PolicyMatrices:
    m: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class AdmissibilityReport:
    spectral_radius: float
    admissible: bool
    iterations_used: int
    method: str = "power"


def policy_weights(model: MDPGamma, policy: StationaryPolicy) -> np.ndarray:
    """Probability the policy assigns to each available pair, in ``model.pairs`` order."""
    cm = model.compiled
    w = np.zeros(len(cm.pairs))
    for s in cm.states:
        lot = policy.choice.get(s)
        if lot is None:
            raise PolicyInvalid(f"policy has no action lottery for state {s!r}")
        if not isinstance(lot, Lottery):
            raise PolicyInvalid(f"policy entry for {s!r} is not a lottery")
        problems = lot.problems()
        if problems:
            raise PolicyInvalid(f"policy lottery at {s!r}: {problems[0][1]}")
        for a, p in lot:
            k = cm.pair_index.get((s, a))
            if k is None:
                raise PolicyInvalid(f"action {a!r} is not available at {s!r}")
            w[k] += p
    extra = set(policy.choice) - set(cm.states)
    if extra:
        raise PolicyInvalid(f"policy mentions unknown states {sorted(map(str, extra))}")
    return w


def policy_matrices(model: MDPGamma, policy: StationaryPolicy) -> PolicyMatrices:
    cm = model.compiled
    w = policy_weights(model, policy)
    n = len(cm.states)
    m = np.zeros((n, n))
    r = np.zeros(n)
    # rows accumulate over the (few) actions of each state
    np.add.at(m, cm.pair_state, (w * cm.gamma)[:, None] * cm.transition)
    np.add.at(r, cm.pair_state, w * cm.reward)
    m.setflags(write=False)
    r.setflags(write=False)
    return PolicyMatrices(m, r)


def spectral_radius(m, tol: float = POWER_TOL, max_iter: int = 10_000) -> AdmissibilityReport:
    """Largest eigenvalue modulus of a nonnegative square matrix.

    Power iteration from the all-ones vector; for a nonnegative matrix the
    max-norm growth ratio converges to the Perron root. If the iterate
    vanishes (nilpotent matrix) or the ratio fails to settle within
    ``max_iter`` steps (e.g. periodic structure), fall back to Gelfand's
    formula ``ρ = lim ||M^(2^k)||^(1/2^k)`` evaluated by repeated squaring.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValueError("matrix entries must be finite and nonnegative")

    x = np.ones(m.shape[0])
    prev = prev_change = None
    it = 0
    for it in range(1, max_iter + 1):
        y = m @ x
        growth = float(y.max())
        if growth == 0.0:
            break
        x = y / growth
        if prev is not None:
            change = abs(growth - prev)
            est = _settled(m, x, growth, change, prev_change, tol, warm=it > m.shape[0])
            if est is not None:
                return _report(est, it, "power")
            prev_change = change
        prev = growth
    return _squaring_radius(m, tol, it)


def _settled(m, x, growth, change, prev_change, tol, warm):
    """Converged estimate of the radius, or None to keep iterating."""
    if np.all(x > 0):
        # Collatz-Wielandt bracket: min (Mx)_i/x_i <= rho <= max (Mx)_i/x_i
        ratios = (m @ x) / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo < tol:
            return 0.5 * (lo + hi)
    # components on the nilpotent part of M are gone after n steps; before
    # that the growth ratio can stall at a transient value
    if not warm:
        return None
    if change == 0.0:
        return growth
    if prev_change is None or prev_change == 0.0:
        return None
    rate = change / prev_change
    if rate >= 1.0:
        return None
    # geometric tail estimate of the remaining error
    if change * max(1.0, rate / (1.0 - rate)) < 0.1 * tol:
        return growth
    return None


def _squaring_radius(m, tol, used, max_squarings=64) -> AdmissibilityReport:
    norm = float(np.abs(m).sum(axis=1).max())
    if norm == 0.0:
        return _report(0.0, used, "squaring")
    b = m / norm
    log_scale = np.log(norm)
    power = 1
    prev = norm
    for k in range(1, max_squarings + 1):
        b = b @ b
        power *= 2
        c = float(b.sum(axis=1).max())
        if c == 0.0:
            return _report(0.0, used + k, "squaring")
        b /= c
        log_scale = 2.0 * log_scale + np.log(c)
        est = float(np.exp(log_scale / power))
        if abs(est - prev) < tol:
            return _report(est, used + k, "squaring")
        prev = est
    raise NoConvergence("spectral radius did not converge", estimate=prev, iterations=used + max_squarings)


def _report(rho, iterations, method) -> AdmissibilityReport:
    return AdmissibilityReport(rho, rho < 1.0 - ADMISSIBILITY_MARGIN, iterations, method)


def admissibility(model: MDPGamma, policy: StationaryPolicy) -> AdmissibilityReport:
    return spectral_radius(policy_matrices(model, policy).m)


def _require_admissible(m, policy) -> AdmissibilityReport:
    report = spectral_radius(m)
    if not report.admissible:
        raise InadmissiblePolicy(spectral_radius=report.spectral_radius, policy=policy)
    return report


def _solve(m, rhs):
    a = np.eye(m.shape[0]) - m
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise Singular(str(exc)) from exc
    if not np.all(np.isfinite(sol)) or np.linalg.cond(a) > 1e15:
        raise Singular("I - M is singular to working precision")
    return sol


def successor_matrix(model: MDPGamma, policy: StationaryPolicy) -> np.ndarray:
    """Generalized successor representation ``S = (I - M)^{-1}``."""
    pm = policy_matrices(model, policy)
    _require_admissible(pm.m, policy)
    s = _solve(pm.m, np.eye(model.n))
    s.setflags(write=False)
    return s


def evaluate_policy(model: MDPGamma, policy: StationaryPolicy, method: str = "direct") -> UtilityVector:
    pm = policy_matrices(model, policy)
    _require_admissible(pm.m, policy)
    if method == "direct":
        u = _solve(pm.m, pm.r)
    elif method == "iterative":
        u = _iterate(pm.m, pm.r)
    else:
        raise ValueError(f"unknown method {method!r}")
    return UtilityVector(model.states, u)


def _iterate(m, r):
    u = np.zeros_like(r)
    for sweep in range(1, ITERATIVE_MAX_SWEEPS + 1):
        nxt = r + m @ u
        if np.max(np.abs(nxt - u)) < ITERATIVE_TOL:
            return nxt
        u = nxt
    raise NoConvergence("iterative evaluation hit the sweep cap", estimate=u, iterations=ITERATIVE_MAX_SWEEPS)


def backup(model: MDPGamma, values) -> np.ndarray:
    """ℛ(s,a) + Γ(s,a)·E[values(s')] for every available pair, in ``model.pairs`` order."""
    cm = model.compiled
    return cm.reward + cm.gamma * (cm.transition @ np.asarray(values, dtype=float))


def evaluate_q(model: MDPGamma, policy: StationaryPolicy) -> dict:
    u = evaluate_policy(model, policy)
    q = backup(model, u.values)
    return {pair: float(v) for pair, v in zip(model.pairs, q)}


def evaluate_prefix_policy(model: MDPGamma, pp: PrefixPolicy) -> UtilityVector:
    """Utility of following each prefix policy for one step, then the tail forever."""
    u = evaluate_policy(model, pp.tail).values
    for step in reversed(pp.prefix):
        pm = policy_matrices(model, step)
        u = pm.r + pm.m @ u
    return UtilityVector(model.states, u)


def lottery_utility(model: MDPGamma, state_lottery: Lottery, policy: StationaryPolicy) -> float:
    return lottery_expectation(state_lottery, evaluate_policy(model, policy))
