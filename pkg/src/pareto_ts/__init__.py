"""Thompson sampling for Pareto-distributed bandit rewards.

STS / STS-T policies under the priors ``alpha**-k / kappa``, the closed-form
regret lower bound, and a reproducible Monte-Carlo regret harness.
"""

from .bounds import BanditModel, analysis_constants, c_star, kl_inf, kl_inf_oracle, lower_bound_curve
from .distributions import ErlangParams, ParetoParams
from .estimation import ArmState, mle, truncated_alpha
from .policy import AgentState, PolicyConfig, observe, select_arm
from .rng import RngStream
from .simulator import Environment, RegretAggregate, run_episode, run_experiment

__all__ = [
    "AgentState",
    "ArmState",
    "BanditModel",
    "Environment",
    "ErlangParams",
    "ParetoParams",
    "PolicyConfig",
    "RegretAggregate",
    "RngStream",
    "analysis_constants",
    "c_star",
    "kl_inf",
    "kl_inf_oracle",
    "lower_bound_curve",
    "mle",
    "observe",
    "run_episode",
    "run_experiment",
    "select_arm",
    "truncated_alpha",
]
