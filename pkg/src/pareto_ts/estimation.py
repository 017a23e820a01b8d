"""Per-arm sufficient statistics and the closed-form Pareto MLEs.

Logs go through numpy ufuncs, never ``math``: numpy's SIMD kernels may differ
from libm in the last ulp, and the batch simulator must reproduce the scalar
path bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArmState:
    """Play count, running minimum and running sum of log-rewards of one arm."""

    n: int = 0
    min_reward: float = math.inf
    sum_log: float = 0.0

    @classmethod
    def from_rewards(cls, rewards) -> "ArmState":
        state = cls()
        for r in rewards:
            state = update(state, r)
        return state


@dataclass(frozen=True)
class MleEstimate:
    kappa_hat: float
    alpha_hat: float  # +inf for an all-equal sample


def update(state: ArmState, reward: float) -> ArmState:
    reward = float(reward)
    if not (reward > 0 and math.isfinite(reward)):
        raise ValueError(f"reward must be positive and finite, got {reward!r}")
    return ArmState(
        n=state.n + 1,
        min_reward=min(state.min_reward, reward),
        sum_log=state.sum_log + float(np.log(reward)),
    )


def mle(state: ArmState) -> MleEstimate:
    """MLEs ``(min r, n / sum log(r / min r))``; needs at least two rewards."""
    if state.n < 2:
        raise ValueError(f"shape MLE needs n >= 2 observations, got n={state.n}")
    denom = state.sum_log - state.n * float(np.log(state.min_reward))
    # all rewards equal: exact zero, or a rounding residue of either sign
    if denom <= 0:
        return MleEstimate(state.min_reward, math.inf)
    return MleEstimate(state.min_reward, state.n / denom)


def truncated_alpha(state: ArmState) -> float:
    """``min(n, alpha_hat)``, always finite."""
    return min(float(state.n), mle(state).alpha_hat)
