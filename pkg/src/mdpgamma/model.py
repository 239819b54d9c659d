"""Environment, policy and utility data model.

Models are plain immutable containers. Construction never fails on bad
content; :func:`validate_model` reports what is wrong, and the numerical
modules refuse models that do not validate (:class:`~mdpgamma.errors.ModelInvalid`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ModelInvalid, ModelMismatch

PROB_TOL = 1e-12

State = str
Action = str
Pair = tuple  # (state, action)


@dataclass(frozen=True)
class Lottery:
    """Finite-support probability distribution, stored as ordered (outcome, p) pairs."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((x, p) for x, p in self.entries))

    @classmethod
    def of(cls, dist: Mapping | Iterable) -> "Lottery":
        items = dist.items() if isinstance(dist, Mapping) else dist
        return cls(tuple((x, float(p)) for x, p in items))

    @classmethod
    def degenerate(cls, outcome: Hashable) -> "Lottery":
        return cls(((outcome, 1.0),))

    @classmethod
    def uniform(cls, outcomes: Sequence) -> "Lottery":
        return cls(tuple((x, 1.0 / len(outcomes)) for x in outcomes))

    @property
    def support(self) -> tuple:
        return tuple(x for x, _ in self.entries)

    @property
    def is_degenerate(self) -> bool:
        return len(self.entries) == 1

    def probability(self, outcome) -> float:
        return sum(p for x, p in self.entries if x == outcome)

    def items(self):
        return iter(self.entries)

    def __iter__(self) -> Iterator:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def problems(self) -> list[tuple[str, str]]:
        """Return (code, message) for each broken lottery invariant."""
        out = []
        if not self.entries:
            return [("EMPTY_LOTTERY", "lottery has empty support")]
        seen = set()
        for x, p in self.entries:
            if x in seen:
                out.append(("DUPLICATE_OUTCOME", f"outcome {x!r} listed twice"))
            seen.add(x)
            if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 < p <= 1.0):
                out.append(("PROB_RANGE", f"probability {p!r} of {x!r} outside (0, 1]"))
        try:
            total = math.fsum(p for _, p in self.entries)
        except TypeError:
            return out
        if math.isfinite(total) and abs(total - 1.0) > PROB_TOL:
            out.append(("PROB_SUM", f"probabilities sum to {total:.15g}, not 1"))
        return out


@dataclass(frozen=True)
class FiniteSDP:
    """States, per-state available actions, transition lotteries and the initial lottery.

    ``actions`` is the global declared action order; it drives tie-breaking
    and row order everywhere.
    """

    states: tuple
    actions: tuple
    available: Mapping
    transition: Mapping
    initial: Lottery

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(
            self, "available", MappingProxyType({s: tuple(a) for s, a in self.available.items()})
        )
        object.__setattr__(self, "transition", MappingProxyType(dict(self.transition)))


@dataclass(frozen=True)
class MDPGamma:
    """An SDP with a reward ℛ(s, a) and an anticipation factor Γ(s, a) ≥ 0 per available pair."""

    sdp: FiniteSDP
    reward: Mapping
    gamma_fn: Mapping

    def __post_init__(self):
        object.__setattr__(self, "reward", MappingProxyType(dict(self.reward)))
        object.__setattr__(self, "gamma_fn", MappingProxyType(dict(self.gamma_fn)))

    @property
    def states(self) -> tuple:
        return self.sdp.states

    @property
    def actions(self) -> tuple:
        return self.sdp.actions

    @property
    def n(self) -> int:
        return len(self.sdp.states)

    def available(self, state) -> tuple:
        """Actions available at ``state`` in declared action order."""
        return self.compiled.available[state]

    def index(self, state) -> int:
        try:
            return self.compiled.state_index[state]
        except KeyError:
            raise ModelMismatch(f"unknown state {state!r}") from None

    @property
    def pairs(self) -> tuple:
        """All available (state, action) pairs, by state order then action order."""
        return self.compiled.pairs

    @cached_property
    def compiled(self) -> "CompiledModel":
        return compile_model(self)


@dataclass(frozen=True)
class FixedGammaMDP:
    """Classical discounted MDP over an SDP: reward R(s, a) and a single γ in [0, 1)."""

    sdp: FiniteSDP
    reward: Mapping
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "reward", MappingProxyType(dict(self.reward)))
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma!r}")

    def lift(self) -> MDPGamma:
        """The equivalent MDP-Γ with Γ ≡ γ on every available pair."""
        return MDPGamma(self.sdp, self.reward, {k: self.gamma for k in self.reward})


@dataclass(frozen=True)
class StationaryPolicy:
    """Maps each state to a lottery over its available actions."""

    choice: Mapping

    def __post_init__(self):
        object.__setattr__(self, "choice", MappingProxyType(dict(self.choice)))

    @classmethod
    def deterministic(cls, actions: Mapping) -> "StationaryPolicy":
        return cls({s: Lottery.degenerate(a) for s, a in actions.items()})

    @property
    def is_deterministic(self) -> bool:
        return all(lot.is_degenerate for lot in self.choice.values())

    def action(self, state):
        """The single action taken at ``state``; only meaningful for deterministic policies."""
        lot = self.choice[state]
        if not lot.is_degenerate:
            raise ValueError(f"policy is stochastic at {state!r}")
        return lot.entries[0][0]

    def as_actions(self) -> dict:
        return {s: self.action(s) for s in self.choice}

    def label(self, states: Sequence | None = None) -> str:
        """Short identifier such as ``L:LL,M:ML,H:HM`` (deterministic) or with probabilities."""
        keys = states if states is not None else list(self.choice)
        parts = []
        for s in keys:
            lot = self.choice[s]
            if lot.is_degenerate:
                parts.append(f"{s}:{lot.entries[0][0]}")
            else:
                parts.append(f"{s}:" + "+".join(f"{a}@{p:g}" for a, p in lot.entries))
        return ",".join(parts)


@dataclass(frozen=True)
class PrefixPolicy:
    """Follow ``prefix[0]``, ``prefix[1]``, ... for one step each, then ``tail`` forever."""

    prefix: tuple
    tail: StationaryPolicy

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))


@dataclass(frozen=True)
class UtilityVector:
    states: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "states", tuple(self.states))
        if vals.shape != (len(self.states),):
            raise ValueError("utility vector length does not match state count")
        if not np.all(np.isfinite(vals)):
            raise ValueError("utility vector has non-finite entries")

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return float(self.values[key])
        try:
            return float(self.values[self.states.index(key)])
        except ValueError:
            raise ModelMismatch(f"unknown state {key!r}") from None

    def __len__(self):
        return len(self.states)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def as_dict(self) -> dict:
        return {s: float(v) for s, v in zip(self.states, self.values)}

    def __repr__(self):
        inner = ", ".join(f"{s}={v:.10g}" for s, v in zip(self.states, self.values))
        return f"UtilityVector({inner})"


class Violation(NamedTuple):
    code: str
    message: str
    location: str = ""


def validate_model(model: MDPGamma) -> list[Violation]:
    """Check every structural invariant of ``model``; an empty list means valid."""
    sdp = model.sdp
    out: list[Violation] = []

    def add(code, msg, loc=""):
        out.append(Violation(code, msg, loc))

    states = list(sdp.states)
    state_set = set(states)
    action_set = set(sdp.actions)
    if not states:
        add("NO_STATES", "state list is empty")
    for dup in _duplicates(states):
        add("DUPLICATE_STATE", f"state {dup!r} declared more than once", str(dup))
    for dup in _duplicates(sdp.actions):
        add("DUPLICATE_ACTION", f"action {dup!r} declared more than once", str(dup))

    pairs = set()
    for s in sdp.available:
        if s not in state_set:
            add("UNKNOWN_STATE", f"availability given for undeclared state {s!r}", str(s))
    for s in states:
        acts = sdp.available.get(s, ())
        if not acts:
            add("NO_ACTIONS", f"state {s!r} has no available actions", str(s))
        for dup in _duplicates(acts):
            add("DUPLICATE_ACTION", f"action {dup!r} listed twice at {s!r}", str(s))
        for a in acts:
            if a not in action_set:
                add("UNKNOWN_ACTION", f"action {a!r} at {s!r} is not declared", f"{s}/{a}")
            pairs.add((s, a))

    for pair in sorted(pairs, key=str):
        loc = f"{pair[0]}/{pair[1]}"
        lot = sdp.transition.get(pair)
        if lot is None:
            add("MISSING_TRANSITION", f"no transition lottery for {loc}", loc)
            continue
        _check_lottery(lot, state_set, loc, add)
    for pair in sdp.transition:
        if pair not in pairs:
            add("EXTRA_TRANSITION", f"transition given for unavailable pair {pair!r}", str(pair))

    _check_lottery(sdp.initial, state_set, "initial", add)

    for table, name in ((model.reward, "REWARD"), (model.gamma_fn, "GAMMA")):
        for pair in sorted(pairs, key=str):
            loc = f"{pair[0]}/{pair[1]}"
            if pair not in table:
                add(f"MISSING_{name}", f"no {name.lower()} value for {loc}", loc)
                continue
            val = table[pair]
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
                add("NONFINITE", f"{name.lower()} at {loc} is not a finite number: {val!r}", loc)
            elif name == "GAMMA" and val < 0:
                add("NEG_GAMMA", f"gamma at {loc} is negative: {val!r}", loc)
        for pair in table:
            if pair not in pairs:
                add(f"EXTRA_{name}", f"{name.lower()} given for unavailable pair {pair!r}", str(pair))
    return out


def _check_lottery(lot, state_set, loc, add):
    if not isinstance(lot, Lottery):
        add("NOT_A_LOTTERY", f"{loc} is not a lottery", loc)
        return
    for code, msg in lot.problems():
        add(code, f"{loc}: {msg}", loc)
    for x in lot.support:
        if x not in state_set:
            add("UNKNOWN_STATE", f"{loc}: outcome {x!r} is not a declared state", loc)


def _duplicates(items) -> list:
    seen, dups = set(), []
    for x in items:
        if x in seen and x not in dups:
            dups.append(x)
        seen.add(x)
    return dups


def lottery_expectation(lottery: Lottery, values: UtilityVector) -> float:
    """Probability-weighted sum of ``values`` over the lottery's support."""
    total = 0.0
    for s, p in lottery:
        if s not in values.states:
            raise ModelMismatch(f"lottery outcome {s!r} has no utility value")
        total += p * values[s]
    return total


@dataclass(frozen=True)
class CompiledModel:
    """Dense arrays for a validated model. Pair ``k`` is ``pairs[k]``."""

    states: tuple
    state_index: Mapping
    pairs: tuple
    pair_index: Mapping
    available: Mapping
    pair_state: np.ndarray  # (P,) state index of each pair
    reward: np.ndarray  # (P,)
    gamma: np.ndarray  # (P,)
    transition: np.ndarray  # (P, n) row-stochastic


def compile_model(model: MDPGamma) -> CompiledModel:
    violations = validate_model(model)
    if violations:
        raise ModelInvalid(violations)
    sdp = model.sdp
    order = {a: i for i, a in enumerate(sdp.actions)}
    state_index = {s: i for i, s in enumerate(sdp.states)}
    available = {s: tuple(sorted(sdp.available[s], key=order.__getitem__)) for s in sdp.states}
    pairs = tuple((s, a) for s in sdp.states for a in available[s])
    n, P = len(sdp.states), len(pairs)
    trans = np.zeros((P, n))
    for k, pair in enumerate(pairs):
        for s2, p in sdp.transition[pair]:
            trans[k, state_index[s2]] += p
    arrays = [
        np.array([state_index[s] for s, _ in pairs], dtype=np.intp),
        np.array([float(model.reward[p]) for p in pairs]),
        np.array([float(model.gamma_fn[p]) for p in pairs]),
        trans,
    ]
    for arr in arrays:
        arr.setflags(write=False)
    return CompiledModel(
        states=sdp.states,
        state_index=MappingProxyType(state_index),
        pairs=pairs,
        pair_index=MappingProxyType({p: k for k, p in enumerate(pairs)}),
        available=MappingProxyType(available),
        pair_state=arrays[0],
        reward=arrays[1],
        gamma=arrays[2],
        transition=arrays[3],
    )


def utility(model: MDPGamma, values) -> UtilityVector:
    return UtilityVector(model.states, np.asarray(values, dtype=float))
