"""Regret lower bound for Pareto bandits and related analysis constants.

``KL_inf(a)`` is the smallest divergence from arm ``a``'s law to a Pareto law
whose mean beats the best arm's mean ``mu1``; the asymptotic regret of any
uniformly fast policy is at least ``log T * sum_a Delta_a / KL_inf(a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import optimize

from .distributions import ParetoParams, pareto_mean
from .special import lambert_w0

# the open constraint mu > mu1 is searched as mu >= mu1 + MU_MARGIN
MU_MARGIN = 1e-9


class ModelError(ValueError):
    """Invalid bandit model for the requested computation."""


@dataclass(frozen=True)
class BanditModel:
    arms: tuple

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise ModelError("model has no arms")
        for i, p in enumerate(arms):
            if not isinstance(p, ParetoParams):
                raise ModelError(f"arm {i} is not a ParetoParams")
            if p.alpha <= 1:
                raise ModelError(f"arm {i} has alpha={p.alpha} <= 1 (infinite mean)")
        object.__setattr__(self, "arms", arms)

    @classmethod
    def from_params(cls, kappas: Sequence[float], alphas: Sequence[float]) -> "BanditModel":
        if len(kappas) != len(alphas):
            raise ModelError(f"{len(kappas)} kappa values but {len(alphas)} alpha values")
        return cls(tuple(ParetoParams(k, a) for k, a in zip(kappas, alphas)))

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @cached_property
    def means(self) -> np.ndarray:
        return np.array([pareto_mean(p) for p in self.arms])

    @property
    def mu_star(self) -> float:
        return float(self.means.max())

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.means))

    @property
    def has_unique_optimum(self) -> bool:
        return int(np.sum(self.means == self.mu_star)) == 1

    @cached_property
    def gaps(self) -> np.ndarray:
        return self.mu_star - self.means

    @property
    def suboptimal_arms(self) -> list:
        return [a for a in range(self.n_arms) if self.gaps[a] > 0]

    @cached_property
    def half_gaps(self) -> np.ndarray:
        """``Delta_a / 2``; the optimal arm gets the smallest of the others."""
        delta = self.gaps / 2.0
        sub = self.suboptimal_arms
        if sub:
            delta[self.optimal_arm] = min(delta[a] for a in sub)
        return delta

    def require_unique_optimum(self) -> None:
        if self.n_arms < 2:
            raise ModelError("no suboptimal arm: model has a single arm")
        if not self.has_unique_optimum:
            tied = [a for a in range(self.n_arms) if self.means[a] == self.mu_star]
            raise ModelError(f"optimal arm is not unique: arms {tied} share mean {self.mu_star}")


def _check_target(arm: ParetoParams, mu_star: float) -> None:
    if arm.alpha <= 1:
        raise ModelError(f"arm alpha={arm.alpha} <= 1 has no finite mean")
    if mu_star <= arm.kappa:
        raise ModelError(f"target mean {mu_star} must exceed the arm's kappa {arm.kappa}")
    # tolerate the rounding of a mean recomputed elsewhere
    if mu_star < pareto_mean(arm) * (1 - 1e-12):
        raise ModelError(f"target mean {mu_star} is below the arm's own mean {pareto_mean(arm)}")


def kl_inf(arm: ParetoParams, mu_star: float) -> float:
    """Closed-form ``KL_inf`` of ``arm`` against target mean ``mu_star``."""
    _check_target(arm, mu_star)
    a, kap = arm.alpha, arm.kappa
    ratio = mu_star / (mu_star - kap)
    value = math.log(a / ratio) + ratio / a - 1.0
    return max(value, 0.0)


def h_boundary(arm: ParetoParams, mu_star: float, c):
    """Largest shape ``alpha`` with ``mean(kappa_a / c, alpha) >= mu_star``."""
    c = np.asarray(c, dtype=float)
    return c * mu_star / (c * mu_star - arm.kappa)


def g_divergence(arm: ParetoParams, alpha, c):
    """``KL(arm || Pa(kappa_a / c, alpha))`` for ``c >= 1``."""
    alpha = np.asarray(alpha, dtype=float)
    c = np.asarray(c, dtype=float)
    return np.log(arm.alpha / alpha) + alpha * np.log(c) + alpha / arm.alpha - 1.0


def c_star(arm: ParetoParams, mu_star: float) -> float:
    """Scale-shrink factor ``c* >= 1`` where the unconstrained optimum hits the boundary.

    ``exp(W0(-(kappa/mu*) e^(1/alpha - 1)) + 1 - 1/alpha)``; solves
    ``h(c) = alpha / (1 + alpha log c)``.
    """
    _check_target(arm, mu_star)
    a = arm.alpha
    w = lambert_w0(-(arm.kappa / mu_star) * math.exp(1.0 / a - 1.0))
    return math.exp(w + 1.0 - 1.0 / a)


def kl_inf_oracle(arm: ParetoParams, mu_star: float, grid_resolution: int = 10_000, refine: bool = True) -> float:
    """Brute-force ``KL_inf``: grid search over the feasible set plus local polish.

    Alternatives are ``Pa(kappa_a / c, alpha)`` with ``c >= 1`` (support must
    cover the arm's).  ``c`` runs over ``grid_resolution`` log-spaced points;
    for each ``c`` the shape runs over fractions of the feasibility boundary
    ``h(c)`` (boundary included).  ``c`` beyond the point where even the
    unconstrained inner minimum ``log(1 + alpha_a log c)`` exceeds the value
    at ``(c=1, alpha=1)`` cannot improve the infimum, which bounds the grid.
    The grid minimum is then polished with L-BFGS-B inside the same box.
    """
    if grid_resolution < 1000:
        raise ValueError("grid_resolution must be >= 1000")
    _check_target(arm, mu_star)
    target = mu_star + MU_MARGIN
    aa = arm.alpha

    cap = math.log(aa) + 1.0 / aa - 1.0
    log_c_max = 2.0 * math.expm1(cap) / aa + 1e-3
    log_c = np.linspace(0.0, log_c_max, grid_resolution)
    frac = np.concatenate([np.geomspace(1e-4, 1.0, 256)[:-1], [1.0]])

    def objective(lc, s):
        c = np.exp(lc)
        return g_divergence(arm, s * h_boundary(arm, target, c), c)

    values = objective(log_c[:, None], frac[None, :])
    i, j = np.unravel_index(np.argmin(values), values.shape)
    best = float(values[i, j])
    if not refine:
        return max(best, 0.0)

    res = optimize.minimize(
        lambda z: float(objective(z[0], z[1])),
        x0=np.array([log_c[i], frac[j]]),
        method="L-BFGS-B",
        bounds=[(0.0, log_c_max), (1e-4, 1.0)],
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500},
    )
    if res.success or np.isfinite(res.fun):
        best = min(best, float(res.fun))
    return max(best, 0.0)


def lower_bound_coefficient(model: BanditModel) -> float:
    """``sum_a Delta_a / KL_inf(a)`` over suboptimal arms (0 for one arm)."""
    if model.n_arms == 1:
        return 0.0
    model.require_unique_optimum()
    mu1 = model.mu_star
    return float(sum(model.gaps[a] / kl_inf(model.arms[a], mu1) for a in model.suboptimal_arms))


def lower_bound_curve(model: BanditModel, rounds) -> tuple:
    """Asymptotic lower bound ``log(t) * coefficient`` at the given rounds (zero offset)."""
    t = np.asarray(rounds, dtype=float)
    if np.any(t < 1):
        raise ValueError("rounds must be >= 1")
    return t, np.log(t) * lower_bound_coefficient(model)


@dataclass(frozen=True)
class AnalysisConstants:
    arm: int
    eps: float
    eps_a: float
    eps_bound: float  # min over all arms of eps_a; eps must lie below it
    eps_l: float
    eps_u: float
    eta: float
    D: float
    kl_inf: float


def eps_threshold(model: BanditModel, arm: int) -> float:
    """Per-arm admissibility threshold on ``eps`` from the optimality theorem."""
    p = model.arms[arm]
    kap, a, mu, d = p.kappa, p.alpha, model.means[arm], model.half_gaps[arm]
    first = kap / (a * (kap + 1)) * kap * d / (mu * (mu + d - kap) + kap * d)
    second = kap * d / (mu * (1 + mu + d))
    return float(min(first, second))


def analysis_constants(model: BanditModel, arm: int, k: int, eps: float) -> AnalysisConstants:
    """Finite-``eps`` constants behind the ``log T / D_{a,k}(eps)`` regret term.

    ``D_{a,k}(eps) -> KL_inf(a)`` as ``eps -> 0``.
    """
    model.require_unique_optimum()
    if arm not in model.suboptimal_arms:
        raise ModelError(f"arm {arm} is not a suboptimal arm")
    if not eps > 0:
        raise ModelError(f"eps must be positive, got {eps!r}")
    bound = min(eps_threshold(model, b) for b in range(model.n_arms))
    if eps >= bound:
        raise ModelError(f"eps={eps!r} must be below min_a eps_a = {bound!r}")

    p = model.arms[arm]
    kap, a = p.kappa, p.alpha
    mu_a, mu1, gap = float(model.means[arm]), model.mu_star, float(model.gaps[arm])

    eps_l = eps * a * a / (1 + eps * a)
    den_u = kap - eps * a * (kap + 1)
    if den_u <= 0:
        raise ModelError("eps too large: eps_{a,u} denominator is not positive")
    eps_u = eps * a * a * (kap + 1) / den_u

    den_eta = (mu_a - kap) * (mu1 - kap - 2 * eps)
    if den_eta <= 0:
        raise ModelError("eps too large: eta denominator is not positive")
    eta = (kap * (gap - eps) - eps * mu_a) / den_eta
    if eta <= 0:
        raise ModelError("eps too large: eta must be positive")

    m = max(0, k) + 1
    y = 1 - eta / a + m * eps * (a - eta)
    if y <= 0:
        raise ModelError("eps too large: log argument of D is not positive")
    D = -math.log(y) - eta / a + m * eps * (a - eta)

    return AnalysisConstants(
        arm=arm,
        eps=eps,
        eps_a=eps_threshold(model, arm),
        eps_bound=bound,
        eps_l=eps_l,
        eps_u=eps_u,
        eta=eta,
        D=D,
        kl_inf=kl_inf(p, mu1),
    )
