"""Posterior draws for one Pareto arm under the prior ``alpha**-k / kappa``.

The shape is drawn from its marginal posterior ``Erlang(n - k, n / alpha_ref)``,
then the scale from the conditional power law
``P[kappa <= x] = (x / kappa_hat) ** (n * alpha)`` on ``(0, kappa_hat]`` by
inverse transform.  ``alpha_ref`` is the shape MLE (STS) or its truncation
``min(n, alpha_hat)`` (STS-T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import GAMMA_BLOCK, standard_gamma_at
from .estimation import ArmState, mle


class DegeneratePosteriorError(ValueError):
    """Raised when the Erlang rate would be zero (all-equal rewards under STS)."""


@dataclass(frozen=True)
class PosteriorInputs:
    n: int
    kappa_hat: float
    alpha_ref: float
    k: int

    def __post_init__(self):
        if self.n - self.k < 1:
            raise ValueError(f"Erlang shape n - k = {self.n - self.k} must be >= 1")
        if not (self.kappa_hat > 0 and math.isfinite(self.kappa_hat)):
            raise ValueError(f"kappa_hat must be positive and finite, got {self.kappa_hat!r}")
        if not math.isfinite(self.alpha_ref):
            raise DegeneratePosteriorError(
                "alpha_ref is infinite (all observed rewards equal); "
                "the Erlang rate n / alpha_ref would be zero"
            )
        if not self.alpha_ref > 0:
            raise ValueError(f"alpha_ref must be positive, got {self.alpha_ref!r}")

    @property
    def shape(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> float:
        return self.n / self.alpha_ref

    @classmethod
    def from_state(cls, state: ArmState, k: int, truncate: bool) -> "PosteriorInputs":
        est = mle(state)
        alpha_ref = min(float(state.n), est.alpha_hat) if truncate else est.alpha_hat
        return cls(state.n, est.kappa_hat, alpha_ref, k)


@dataclass(frozen=True)
class PosteriorDraw:
    alpha_tilde: float
    kappa_tilde: Optional[float]  # absent when alpha_tilde <= 1
    mu_tilde: float


# Arithmetic shared with the vectorized simulator; keep both paths on these.

def alpha_from_gamma(g, n, alpha_ref):
    return g / (n / alpha_ref)


def kappa_from_uniform(kappa_hat, n, alpha_tilde, u):
    return kappa_hat * np.power(u, 1.0 / (n * alpha_tilde))


def mean_from_draw(kappa_tilde, alpha_tilde):
    return kappa_tilde * alpha_tilde / (alpha_tilde - 1.0)


def sample_alpha(inp: PosteriorInputs, rng) -> float:
    """One shape draw; consumes a GAMMA_BLOCK of counters from ``rng``."""
    g, _ = standard_gamma_at(float(inp.shape), rng.key, np.uint64(rng.position))
    rng.position += GAMMA_BLOCK
    return float(alpha_from_gamma(g, inp.n, inp.alpha_ref))


def sample_kappa(inp: PosteriorInputs, alpha_tilde: float, rng=None, u: Optional[float] = None) -> float:
    """Scale draw given the shape; ``u`` may be injected instead of drawn."""
    if not alpha_tilde > 0:
        raise ValueError(f"alpha_tilde must be positive, got {alpha_tilde!r}")
    if u is None:
        u = rng.uniform()
    return float(kappa_from_uniform(inp.kappa_hat, inp.n, alpha_tilde, u))


def sample_mean(
    inp: PosteriorInputs,
    rng=None,
    *,
    kappa_rng=None,
    alpha_tilde: Optional[float] = None,
    u: Optional[float] = None,
) -> PosteriorDraw:
    """Shape draw, then (only if it exceeds 1) a scale draw and the implied mean.

    ``alpha_tilde`` and ``u`` override the random draws.  The scale uniform is
    read from ``kappa_rng`` when given, else from ``rng`` after the shape.
    """
    if alpha_tilde is None:
        alpha_tilde = sample_alpha(inp, rng)
    if alpha_tilde <= 1:
        return PosteriorDraw(alpha_tilde, None, math.inf)
    kappa_tilde = sample_kappa(inp, alpha_tilde, kappa_rng if kappa_rng is not None else rng, u)
    return PosteriorDraw(alpha_tilde, kappa_tilde, float(mean_from_draw(kappa_tilde, alpha_tilde)))
