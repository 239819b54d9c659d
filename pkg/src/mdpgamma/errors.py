"""Exception types raised by the solver.

Every error carries a machine-readable ``code`` so the CLI can map failures to
exit codes without string matching.
"""

from __future__ import annotations


class MDPGammaError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


class ModelMismatch(MDPGammaError):
    code = "MODEL_MISMATCH"


class ModelInvalid(MDPGammaError):
    """Raised when an operation is handed a model that fails validation."""

    code = "MODEL_INVALID"

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.code}: {v.message}" for v in self.violations[:5])
        super().__init__(f"model has {len(self.violations)} violation(s): {lines}")


class PolicyInvalid(MDPGammaError):
    code = "POLICY_INVALID"


class StochasticPolicy(PolicyInvalid):
    """An operation defined only for deterministic policies got a stochastic one."""

    code = "STOCHASTIC_POLICY"


class InadmissiblePolicy(MDPGammaError):
    code = "INADMISSIBLE_POLICY"

    def __init__(self, message: str = "", *, spectral_radius: float, policy=None):
        super().__init__(message or f"spectral radius {spectral_radius:.10g} is not below 1")
        self.spectral_radius = spectral_radius
        self.policy = policy


class NoConvergence(MDPGammaError):
    code = "NO_CONVERGENCE"

    def __init__(self, message: str = "", *, estimate=None, iterations: int | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations


class Singular(MDPGammaError):
    code = "SINGULAR"


class CycleDetected(MDPGammaError):
    code = "CYCLE_DETECTED"

    def __init__(self, message: str = "", *, policy=None):
        super().__init__(message)
        self.policy = policy


class PolicyListTooLarge(MDPGammaError):
    code = "POLICY_LIST_TOO_LARGE"


class FormatError(MDPGammaError):
    """Malformed environment or policy document (bad JSON, wrong types, unknown members)."""

    code = "FORMAT_ERROR"
