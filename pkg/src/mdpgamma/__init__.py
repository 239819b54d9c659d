"""Tabular solver for sequential decision processes with state-action dependent discounting."""

from .errors import (
    CycleDetected,
    InadmissiblePolicy,
    MDPGammaError,
    ModelInvalid,
    ModelMismatch,
    NoConvergence,
    PolicyInvalid,
    PolicyListTooLarge,
    Singular,
)
from .evaluation import (
    AdmissibilityReport,
    PolicyMatrices,
    admissibility,
    evaluate_policy,
    evaluate_prefix_policy,
    evaluate_q,
    lottery_utility,
    policy_matrices,
    spectral_radius,
    successor_matrix,
)
from .fixed_gamma import ReversalReport, gamma_sweep, implied_fixed_gamma_rewards, representability_check
from .formats import load_env, load_fixture, load_policy
from .model import (
    FiniteSDP,
    FixedGammaMDP,
    Lottery,
    MDPGamma,
    PrefixPolicy,
    StationaryPolicy,
    UtilityVector,
    lottery_expectation,
    validate_model,
)
from .optimizing import GapReport, construct_optimizing_mdp, mdp_value, value_utility_gap
from .planning import PlanResult, greedy_policy, policy_iteration, value_iteration, verify_optimal
from .rollout import RolloutEstimate, estimate_utility, sample_return

__version__ = "0.1.0"
