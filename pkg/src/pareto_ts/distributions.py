"""Pareto and Erlang laws: densities, moments, KL divergence and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import MAX_INDEX, RngStream, uniforms_at
from .special import gammainc_lower

# one rejection attempt of the gamma sampler consumes this many uniforms
_GAMMA_UNIFORMS_PER_ATTEMPT = 3
# counters reserved per gamma variate drawn from a sequential stream
GAMMA_BLOCK = MAX_INDEX
_ATTEMPT_OFFSETS = np.arange(_GAMMA_UNIFORMS_PER_ATTEMPT, dtype=np.uint64)


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ParetoParams:
    """Pareto type-I law on ``[kappa, inf)`` with tail index ``alpha``."""

    kappa: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kappa", _check_positive("kappa", self.kappa))
        object.__setattr__(self, "alpha", _check_positive("alpha", self.alpha))

    @property
    def has_finite_mean(self) -> bool:
        return self.alpha > 1

    @property
    def mean(self) -> float:
        return pareto_mean(self)


@dataclass(frozen=True)
class ErlangParams:
    shape: int
    rate: float

    def __post_init__(self):
        if isinstance(self.shape, bool) or int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"Erlang shape must be a positive integer, got {self.shape!r}")
        object.__setattr__(self, "shape", int(self.shape))
        object.__setattr__(self, "rate", _check_positive("rate", self.rate))

    @property
    def mean(self) -> float:
        return self.shape / self.rate


def pareto_pdf(p: ParetoParams, x: float) -> float:
    if x < p.kappa:
        return 0.0
    return p.alpha * p.kappa**p.alpha / x ** (p.alpha + 1)


def pareto_cdf(p: ParetoParams, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(x < p.kappa, 0.0, 1.0 - (p.kappa / np.maximum(x, p.kappa)) ** p.alpha)
    return out if out.ndim else float(out)


def pareto_mean(p: ParetoParams) -> float:
    """Mean ``kappa*alpha/(alpha-1)``; ``inf`` when ``alpha <= 1``."""
    if p.alpha <= 1:
        return math.inf
    return p.kappa * p.alpha / (p.alpha - 1)


def pareto_mean_of(kappa, alpha):
    """Vectorized mean; infinite wherever ``alpha <= 1``."""
    kappa = np.asarray(kappa, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(alpha > 1, kappa * alpha / (alpha - 1), np.inf)


def pareto_raw_moment(p: ParetoParams, gamma: float) -> float:
    """``E[X**gamma]`` for ``gamma >= 1``; infinite when ``alpha <= gamma``."""
    if not gamma >= 1:
        raise ValueError(f"moment order must be >= 1, got {gamma!r}")
    if p.alpha <= gamma:
        return math.inf
    return p.alpha * p.kappa**gamma / (p.alpha - gamma)


def pareto_kl(p: ParetoParams, q: ParetoParams) -> float:
    """KL(p || q); infinite unless q's support contains p's (``q.kappa <= p.kappa``)."""
    if q.kappa > p.kappa:
        return math.inf
    return (
        math.log(p.alpha / q.alpha)
        + q.alpha * math.log(p.kappa / q.kappa)
        + q.alpha / p.alpha
        - 1.0
    )


def pareto_from_uniform(kappa, alpha, u):
    """Inverse-transform map ``kappa * u**(-1/alpha)`` for ``u`` in (0, 1]."""
    return kappa * np.power(u, -1.0 / alpha)


def pareto_samples(p: ParetoParams, rng: RngStream, size: int) -> np.ndarray:
    return pareto_from_uniform(p.kappa, p.alpha, rng.uniforms(size))


def pareto_sample(p: ParetoParams, rng: RngStream) -> float:
    return float(pareto_samples(p, rng, 1)[0])


def standard_gamma_at(shape, keys, counters):
    """Standard gamma variates by Marsaglia-Tsang, one per element.

    Element ``i`` reads uniforms at ``counters[i] + 0, 1, 2, ...`` of the
    stream with key ``keys[i]``, three per rejection attempt (two for a
    Box-Muller normal, one for the acceptance test).  Returns the variates
    and the number of attempts each one took.  ``shape`` must be >= 1.
    """
    shape, keys, counters = np.broadcast_arrays(
        np.asarray(shape, dtype=np.float64),
        np.asarray(keys, dtype=np.uint64),
        np.asarray(counters, dtype=np.uint64),
    )
    out_shape = shape.shape
    shape = shape.ravel()
    keys = keys.ravel()
    counters = counters.ravel()
    if np.any(shape < 1):
        raise ValueError("gamma shape must be >= 1")

    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(shape.size)
    attempts = np.zeros(shape.size, dtype=np.int64)
    pending = None  # None means every element, without an index copy
    j = 0
    with np.errstate(invalid="ignore"):
        while True:
            offset = _GAMMA_UNIFORMS_PER_ATTEMPT * j
            if offset + _GAMMA_UNIFORMS_PER_ATTEMPT > MAX_INDEX:
                raise ArithmeticError("gamma sampler exhausted its counter block")
            if pending is None:
                k, cb, dp, cp = keys, counters, d, c
            else:
                k, cb, dp, cp = keys[pending], counters[pending], d[pending], c[pending]
            u = uniforms_at(k, cb + _ATTEMPT_OFFSETS[:, None] + np.uint64(offset))
            x = np.sqrt(-2.0 * np.log(u[0])) * np.cos(2.0 * np.pi * u[1])
            v = 1.0 + cp * x
            pos = v > 0
            v = np.where(pos, v, 1.0) ** 3
            accept = pos & (np.log(u[2]) < 0.5 * x * x + dp - dp * v + dp * np.log(v))
            idx = np.flatnonzero(accept) if pending is None else pending[accept]
            out[idx] = dp[accept] * v[accept]
            attempts[idx] = j + 1
            pending = np.flatnonzero(~accept) if pending is None else pending[~accept]
            j += 1
            if not pending.size:
                break
    return out.reshape(out_shape), attempts.reshape(out_shape)


def erlang_samples(e: ErlangParams, rng: RngStream, size: int) -> np.ndarray:
    """``size`` Erlang variates; each reserves a block of GAMMA_BLOCK counters."""
    base = rng.position + GAMMA_BLOCK * np.arange(size, dtype=np.uint64)
    rng.position += GAMMA_BLOCK * size
    g, _ = standard_gamma_at(float(e.shape), rng.key, base)
    return g / e.rate


def erlang_sample(e: ErlangParams, rng: RngStream) -> float:
    return float(erlang_samples(e, rng, 1)[0])


def erlang_pdf(e: ErlangParams, x: float) -> float:
    if x <= 0:
        return 0.0
    s, b = e.shape, e.rate
    return math.exp(s * math.log(b) + (s - 1) * math.log(x) - b * x - math.lgamma(s))


def erlang_cdf(e: ErlangParams, x: float) -> float:
    """``gamma(s, rate*x) / Gamma(s)``; zero for ``x <= 0``."""
    if x <= 0:
        return 0.0
    return gammainc_lower(e.shape, e.rate * x)
