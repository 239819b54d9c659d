"""Monte Carlo oracle: sample trajectories and sum their "discounted" rewards.

A trajectory's return is Σ_t D_t ℛ(s_t, a_t) with D_0 = 1 and
D_{t+1} = D_t Γ(s_t, a_t). Individual D_t may grow when Γ > 1; only the
expectation is required to converge, so the early-stopping rule is
expectation-aware and a hard horizon caps the rest.

Randomness comes from :mod:`mdpgamma.philox`; sample ``i`` at step ``t``
always sees the same draws, so estimates do not depend on batching or
sharding.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ModelMismatch, NoConvergence
from .evaluation import policy_matrices, policy_weights, spectral_radius
from .model import MDPGamma, StationaryPolicy
from .philox import split_seed, uniforms

DEFAULT_TAIL_TOL = 1e-10
DEFAULT_HORIZON = 1000
BATCH = 1 << 16
_INITIAL_LANE = 1


@dataclass(frozen=True)
class RolloutEstimate:
    mean: float
    std_error: float
    samples: int
    truncated_fraction: float
    seed: int


@dataclass(frozen=True)
class SubStream:
    """Random stream of one sample: all draws are functions of (seed, index, step)."""

    seed: int
    index: int

    def step(self, t: int) -> tuple[float, float]:
        a, b = uniforms(self.seed, np.array([self.index], dtype=np.uint64), t)
        return float(a[0]), float(b[0])


def _cumulative(weights: np.ndarray) -> np.ndarray:
    """Row-wise inverse-CDF thresholds; the last positive column is pinned to +inf."""
    cum = np.cumsum(weights, axis=1)
    for row, w in zip(cum, weights):
        pos = np.flatnonzero(w > 0)
        row[pos[-1]:] = np.inf
    return cum


class _Simulator:
    def __init__(self, model: MDPGamma, policy: StationaryPolicy):
        cm = model.compiled
        n = len(cm.states)
        w = policy_weights(model, policy)
        width = max(len(cm.available[s]) for s in cm.states)
        act_pair = np.zeros((n, width), dtype=np.intp)
        act_w = np.zeros((n, width))
        for i, s in enumerate(cm.states):
            for j, a in enumerate(cm.available[s]):
                k = cm.pair_index[(s, a)]
                act_pair[i, j] = k
                act_w[i, j] = w[k]
        self.act_pair = act_pair
        self.act_cum = _cumulative(act_w)
        self.next_cum = _cumulative(cm.transition)
        self.reward = cm.reward
        self.gamma = cm.gamma
        self.initial_cum = _cumulative(np.array([[model.sdp.initial.probability(s) for s in cm.states]]))[0]

        try:
            rho = spectral_radius(policy_matrices(model, policy).m).spectral_radius
        except NoConvergence as exc:
            rho = exc.estimate
        r_max = float(np.max(np.abs(cm.reward)))
        if r_max == 0.0:
            self.bound = 0.0
        elif rho < 1.0:
            self.bound = r_max / (1.0 - rho)
        else:
            self.bound = math.inf

    def run(self, seed, index, start, horizon, tail_tol):
        """Returns (returns, truncated) arrays for the given sample indices."""
        index = np.asarray(index, dtype=np.uint64)
        size = index.shape[0]
        if start is None:
            u0, _ = uniforms(seed, index, 0, lane=_INITIAL_LANE)
            state = (u0[:, None] >= self.initial_cum[None, :]).sum(axis=1)
        else:
            state = np.full(size, start, dtype=np.intp)
        total = np.zeros(size)
        disc = np.ones(size)
        live = np.arange(size)
        for t in range(horizon):
            if live.size == 0:
                break
            ua, un = uniforms(seed, index[live], t)
            s = state[live]
            col = (ua[:, None] >= self.act_cum[s]).sum(axis=1)
            k = self.act_pair[s, col]
            d = disc[live]
            total[live] += d * self.reward[k]
            d = d * self.gamma[k]
            disc[live] = d
            state[live] = (un[:, None] >= self.next_cum[k]).sum(axis=1)
            with np.errstate(invalid="ignore"):
                done = (d == 0.0) | (np.abs(d) * self.bound < tail_tol)
            live = live[~done]
        truncated = np.zeros(size, dtype=bool)
        truncated[live] = True
        return total, truncated


def _start_index(model, start):
    if start is None:
        return None
    try:
        return model.compiled.state_index[start]
    except KeyError:
        raise ModelMismatch(f"unknown start state {start!r}") from None


def sample_return(model: MDPGamma, policy: StationaryPolicy, start, stream: SubStream,
                  horizon: int = DEFAULT_HORIZON, tail_tol: float = DEFAULT_TAIL_TOL):
    """Return of one sampled trajectory and whether it hit the horizon."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    sim = _Simulator(model, policy)
    total, trunc = sim.run(stream.seed, [stream.index], _start_index(model, start), horizon, tail_tol)
    return float(total[0]), bool(trunc[0])


def estimate_utility(model: MDPGamma, policy: StationaryPolicy, start=None, samples: int = 10_000,
                     horizon: int = DEFAULT_HORIZON, seed: int = 0,
                     tail_tol: float = DEFAULT_TAIL_TOL, shards: int = 1) -> RolloutEstimate:
    """Mean return over ``samples`` independent trajectories.

    ``start=None`` draws each trajectory's first state from the model's
    initial lottery. ``shards`` splits the sample range across threads; the
    result is bit-identical for any shard count.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    split_seed(seed)
    sim = _Simulator(model, policy)
    begin = _start_index(model, start)

    bounds = list(range(0, samples, BATCH)) + [samples]
    chunks = list(zip(bounds[:-1], bounds[1:]))

    def work(chunk):
        lo, hi = chunk
        return sim.run(seed, np.arange(lo, hi, dtype=np.uint64), begin, horizon, tail_tol)

    if shards > 1:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    returns = np.concatenate([p[0] for p in parts])
    truncated = np.concatenate([p[1] for p in parts])

    # exactly rounded sums keep the result independent of summation order
    mean = math.fsum(returns) / samples
    if samples > 1:
        var = math.fsum((returns - mean) ** 2) / (samples - 1)
        std_error = math.sqrt(var / samples)
    else:
        std_error = 0.0
    return RolloutEstimate(mean, std_error, samples, float(truncated.mean()), int(seed))
