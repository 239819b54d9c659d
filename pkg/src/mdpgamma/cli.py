"""``mdpg`` command-line front end.

Exit codes: 0 success, 2 validation, 3 I/O or unparseable input,
4 inadmissible policy or planning failure, 5 usage, 6 no representable γ.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import errors
from .evaluation import admissibility, evaluate_policy, evaluate_prefix_policy
from .fixed_gamma import gamma_sweep
from .formats import fixture_names, fixture_text, load_env, load_policy
from .model import PrefixPolicy, StationaryPolicy, validate_model
from .optimizing import construct_optimizing_mdp, solve_fixed_gamma, value_utility_gap
from .planning import greedy_policy, policy_iteration
from .randomized import random_deterministic_policy, random_planned_instance
from .rollout import DEFAULT_HORIZON, estimate_utility

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_PLANNING = 4
EXIT_USAGE = 5
EXIT_UNREPRESENTABLE = 6

DEFAULT_GAMMA = 0.9
GAP_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """10 significant digits, shortest form, no negative zero."""
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".10g")


def row(*cells):
    print("\t".join(str(c) for c in cells))


def _gamma(value: float) -> float:
    if not (0.0 <= value < 1.0) or math.isnan(value):
        raise UsageError(f"--gamma must lie in [0, 1), got {value}")
    return value


def _valid_env(path):
    model = load_env(path)
    violations = validate_model(model)
    if violations:
        raise errors.ModelInvalid(violations)
    return model


def _stationary(path) -> StationaryPolicy:
    policy = load_policy(path)
    if isinstance(policy, PrefixPolicy):
        raise UsageError("this command needs a stationary policy")
    return policy


def cmd_check(args):
    model = load_env(args.env)
    violations = validate_model(model)
    row("item", "status", "detail")
    for v in violations:
        row("violation", v.code, v.message)
    if violations:
        return EXIT_INVALID
    row("model", "valid", f"{model.n} states, {len(model.pairs)} pairs")
    if args.policy:
        report = admissibility(model, _stationary(args.policy))
        status = "admissible" if report.admissible else "inadmissible"
        row("policy", status, f"spectral_radius={fmt(report.spectral_radius)}")
    return EXIT_OK


def cmd_evaluate(args):
    model = _valid_env(args.env)
    policy = load_policy(args.policy)
    if isinstance(policy, PrefixPolicy):
        if args.method != "direct":
            raise UsageError("prefix policies are evaluated by backward recursion only")
        u = evaluate_prefix_policy(model, policy)
    else:
        u = evaluate_policy(model, policy, method=args.method)
    row("state", "utility")
    for s in model.states:
        row(s, fmt(u[s]))
    return EXIT_OK


def cmd_plan(args):
    model = _valid_env(args.env)
    plan = policy_iteration(model)
    row("state", "action", "utility")
    for s in model.states:
        row(s, plan.policy.action(s), fmt(plan.utilities[s]))
    return EXIT_OK


def cmd_optimize(args):
    gamma = _gamma(args.gamma)
    model = _valid_env(args.env)
    plan = policy_iteration(model)
    mdp = construct_optimizing_mdp(model, gamma, plan)
    solved = solve_fixed_gamma(mdp)
    residual = float(np.max(np.abs(solved.utilities.values - plan.utilities.values)))
    row("state", "action", "reward")
    for s, a in model.pairs:
        row(s, a, fmt(mdp.reward[(s, a)]))
    print(f"V*==U* residual {fmt(residual)}")
    greedy = greedy_policy(mdp.lift(), plan.utilities.values)
    return EXIT_OK if residual <= GAP_TOL and greedy.as_actions() == plan.policy.as_actions() else EXIT_PLANNING


def cmd_gap(args):
    gamma = _gamma(args.gamma)
    if args.selftest:
        rng = np.random.default_rng(args.seed)
        model, plan = random_planned_instance(rng, 5)
        policy = random_deterministic_policy(rng, model)
        while not admissibility(model, policy).admissible:
            policy = random_deterministic_policy(rng, model)
    else:
        if not args.env or not args.policy:
            raise UsageError("gap needs ENV and POLICY unless --selftest is given")
        model = _valid_env(args.env)
        policy = _stationary(args.policy)
        if not policy.is_deterministic:
            raise UsageError("value-utility identities are defined for deterministic policies only")
        plan = policy_iteration(model)
    report = value_utility_gap(model, gamma, policy, plan)
    r1 = np.abs(report.u_pi.values - report.identity1_rhs)
    r2 = np.abs(report.u_pi.values - report.identity2_rhs)
    row("state", "u", "v", "identity1_residual", "identity2_residual")
    for i, s in enumerate(model.states):
        row(s, fmt(report.u_pi[s]), fmt(report.v_pi[s]), fmt(r1[i]), fmt(r2[i]))
    ok = report.identity1_residual <= GAP_TOL and report.identity2_residual <= GAP_TOL
    return EXIT_OK if ok else EXIT_PLANNING


def _grid(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if not text.strip() or any(not p for p in parts):
        raise UsageError("--grid must be a non-empty comma-separated list of numbers")
    try:
        grid = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"malformed --grid {text!r}") from None
    for g in grid:
        _gamma(g)
    return grid


def cmd_fit_gamma(args):
    grid = _grid(args.grid)
    model = _valid_env(args.env)
    reports = gamma_sweep(model, grid)
    row("gamma", "reversals", "representable")
    for rep in reports:
        row(fmt(rep.gamma), len(rep.reversals), "yes" if rep.representable else "no")
    return EXIT_OK if any(r.representable for r in reports) else EXIT_UNREPRESENTABLE


def cmd_rollout(args):
    model = _valid_env(args.env)
    policy = _stationary(args.policy)
    if args.state is not None and args.state not in model.states:
        raise UsageError(f"unknown state {args.state!r}")
    if args.samples < 1 or args.horizon < 1:
        raise UsageError("--samples and --horizon must be positive")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    est = estimate_utility(model, policy, args.state, samples=args.samples,
                           horizon=args.horizon, seed=args.seed)
    row("mean", "std_error", "truncated_fraction", "samples", "seed")
    row(fmt(est.mean), fmt(est.std_error), fmt(est.truncated_fraction), est.samples, est.seed)
    return EXIT_OK


def cmd_fixture(args):
    if args.name is None:
        for name in fixture_names():
            print(name)
        return EXIT_OK
    sys.stdout.write(fixture_text(args.name))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mdpg", description="Tabular solver for MDPs with state-action dependent discounting.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="validate an environment file")
    c.add_argument("env")
    c.add_argument("--policy", help="also report this policy's spectral radius")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("evaluate", help="utility of a policy at every state")
    c.add_argument("env")
    c.add_argument("policy")
    c.add_argument("--method", choices=("direct", "iterative"), default="direct")
    c.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("plan", help="optimal stationary policy and its utilities")
    c.add_argument("env")
    c.set_defaults(func=cmd_plan)

    c = sub.add_parser("optimize", help="reward table of the fixed-gamma optimizing MDP")
    c.add_argument("env")
    c.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    c.set_defaults(func=cmd_optimize)

    c = sub.add_parser("gap", help="utility vs optimizing-MDP value of a policy")
    c.add_argument("env", nargs="?")
    c.add_argument("policy", nargs="?")
    c.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    c.add_argument("--selftest", action="store_true", help="use a random 5-state instance instead of files")
    c.add_argument("--seed", type=int, default=0, help="seed for --selftest")
    c.set_defaults(func=cmd_gap)

    c = sub.add_parser("fit-gamma", help="sweep gamma for a fixed-gamma representation")
    c.add_argument("env")
    c.add_argument("--grid", required=True, help="comma-separated gamma values in [0, 1)")
    c.set_defaults(func=cmd_fit_gamma)

    c = sub.add_parser("rollout", help="Monte Carlo utility estimate")
    c.add_argument("env")
    c.add_argument("policy")
    c.add_argument("--state", help="start state (default: draw from the initial lottery)")
    c.add_argument("--samples", type=int, default=10_000)
    c.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_rollout)

    c = sub.add_parser("fixture", help="print a bundled fixture (list them without NAME)")
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_fixture)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except errors.FormatError as exc:
        return _fail(EXIT_IO, str(exc))
    except errors.ModelInvalid as exc:
        for v in exc.violations:
            print(f"{v.code}\t{v.message}", file=sys.stderr)
        return EXIT_INVALID
    except errors.StochasticPolicy as exc:
        return _fail(EXIT_USAGE, str(exc))
    except errors.PolicyInvalid as exc:
        return _fail(EXIT_INVALID, f"{exc.code}: {exc}")
    except errors.InadmissiblePolicy as exc:
        label = exc.policy.label() if exc.policy is not None else "?"
        return _fail(EXIT_PLANNING, f"INADMISSIBLE_POLICY: {label} spectral_radius={fmt(exc.spectral_radius)}")
    except (errors.CycleDetected, errors.NoConvergence, errors.Singular) as exc:
        return _fail(EXIT_PLANNING, f"{exc.code}: {exc}")
    except errors.ModelMismatch as exc:
        return _fail(EXIT_USAGE, f"{exc.code}: {exc}")


def _fail(code: int, message: str) -> int:
    print(f"mdpg: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
