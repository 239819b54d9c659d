"""JSON environment and policy documents.

Environment document::

    {"states": [...], "actions": [...],
     "available":   {state: [action, ...]},
     "transitions": {state: {action: {next_state: p}}},
     "reward":      {state: {action: number}},
     "gamma":       {state: {action: number}},
     "initial":     {state: p}}

Policy document::

    {"type": "stationary" | "prefix",
     "choice": {state: action | {action: p}},
     "prefix": [choice, ...]}          # only with type "prefix"

Shape errors (bad JSON, wrong types, unknown or missing members, duplicate
keys) raise :class:`FormatError`. Content errors such as probabilities that
do not sum to one are left for :func:`mdpgamma.model.validate_model`.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .errors import FormatError
from .model import FiniteSDP, Lottery, MDPGamma, PrefixPolicy, StationaryPolicy

ENV_MEMBERS = ("states", "actions", "available", "transitions", "reward", "gamma", "initial")
FIXTURES = "fixtures"


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise FormatError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _loads(text: str):
    try:
        return json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _obj(value, where):
    if not isinstance(value, dict):
        raise FormatError(f"{where} must be an object")
    return value


def _str_list(value, where):
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise FormatError(f"{where} must be an array of strings")
    return value


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where} must be a number")
    return float(value)


def _dist(value, where) -> Lottery:
    return Lottery.of((k, _number(p, f"{where}.{k}")) for k, p in _obj(value, where).items())


def _pair_table(value, where) -> dict:
    out = {}
    for s, row in _obj(value, where).items():
        for a, x in _obj(row, f"{where}.{s}").items():
            out[(s, a)] = _number(x, f"{where}.{s}.{a}")
    return out


def env_from_dict(doc) -> MDPGamma:
    doc = _obj(doc, "environment")
    unknown = sorted(set(doc) - set(ENV_MEMBERS))
    if unknown:
        raise FormatError(f"unknown member(s): {', '.join(unknown)}")
    missing = [k for k in ENV_MEMBERS if k not in doc]
    if missing:
        raise FormatError(f"missing member(s): {', '.join(missing)}")

    states = _str_list(doc["states"], "states")
    actions = _str_list(doc["actions"], "actions")
    available = {s: _str_list(a, f"available.{s}") for s, a in _obj(doc["available"], "available").items()}
    transitions = {}
    for s, row in _obj(doc["transitions"], "transitions").items():
        for a, dist in _obj(row, f"transitions.{s}").items():
            transitions[(s, a)] = _dist(dist, f"transitions.{s}.{a}")
    sdp = FiniteSDP(states, actions, available, transitions, _dist(doc["initial"], "initial"))
    return MDPGamma(sdp, _pair_table(doc["reward"], "reward"), _pair_table(doc["gamma"], "gamma"))


def env_to_dict(model: MDPGamma) -> dict:
    sdp = model.sdp

    def nested(table):
        out = {}
        for (s, a), x in table.items():
            out.setdefault(s, {})[a] = x
        return out

    return {
        "states": list(sdp.states),
        "actions": list(sdp.actions),
        "available": {s: list(a) for s, a in sdp.available.items()},
        "transitions": nested({k: dict(v.entries) for k, v in sdp.transition.items()}),
        "reward": nested(dict(model.reward)),
        "gamma": nested(dict(model.gamma_fn)),
        "initial": dict(sdp.initial.entries),
    }


def loads_env(text: str) -> MDPGamma:
    return env_from_dict(_loads(text))


def dumps_env(model: MDPGamma) -> str:
    return json.dumps(env_to_dict(model), indent=2) + "\n"


def load_env(path) -> MDPGamma:
    return loads_env(_read(path))


def _choice(value, where) -> StationaryPolicy:
    choice = {}
    for s, spec in _obj(value, where).items():
        if isinstance(spec, str):
            choice[s] = Lottery.degenerate(spec)
        else:
            choice[s] = _dist(spec, f"{where}.{s}")
    return StationaryPolicy(choice)


def policy_from_dict(doc):
    doc = _obj(doc, "policy")
    kind = doc.get("type")
    allowed = {"stationary": {"type", "choice"}, "prefix": {"type", "choice", "prefix"}}
    if kind not in allowed:
        raise FormatError('policy "type" must be "stationary" or "prefix"')
    unknown = sorted(set(doc) - allowed[kind])
    if unknown:
        raise FormatError(f"unknown member(s): {', '.join(unknown)}")
    if "choice" not in doc:
        raise FormatError('policy is missing "choice"')
    tail = _choice(doc["choice"], "choice")
    if kind == "stationary":
        return tail
    steps = doc.get("prefix", [])
    if not isinstance(steps, list):
        raise FormatError('"prefix" must be an array')
    return PrefixPolicy(tuple(_choice(c, f"prefix[{i}]") for i, c in enumerate(steps)), tail)


def _choice_to_dict(policy: StationaryPolicy) -> dict:
    return {
        s: (lot.entries[0][0] if lot.is_degenerate else dict(lot.entries))
        for s, lot in policy.choice.items()
    }


def policy_to_dict(policy) -> dict:
    if isinstance(policy, PrefixPolicy):
        return {
            "type": "prefix",
            "choice": _choice_to_dict(policy.tail),
            "prefix": [_choice_to_dict(p) for p in policy.prefix],
        }
    return {"type": "stationary", "choice": _choice_to_dict(policy)}


def loads_policy(text: str):
    return policy_from_dict(_loads(text))


def load_policy(path):
    return loads_policy(_read(path))


def fixture_names() -> list[str]:
    root = resources.files(__package__) / FIXTURES
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def fixture_text(name: str) -> str:
    if not name.endswith(".json"):
        name += ".json"
    path = resources.files(__package__) / FIXTURES / name
    if not path.is_file():
        raise FormatError(f"no bundled fixture named {name!r}")
    return path.read_text(encoding="utf-8")


def load_fixture(name: str):
    """Bundled environment or policy by file name (``cliff``, ``down-policy``, ...)."""
    doc = _loads(fixture_text(name))
    if isinstance(doc, dict) and "type" in doc:
        return policy_from_dict(doc)
    return env_from_dict(doc)
