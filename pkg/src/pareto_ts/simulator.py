"""Bandit environments, episodes and the Monte-Carlo regret driver.

Regret here is pseudo-regret, ``sum_t Delta_{j(t)}``.

``run_episode`` plays one episode through the policy functions one round at a
time.  ``run_experiment`` runs many episodes in lockstep with numpy, in fixed
chunks of ``CHUNK_SIZE`` replications.  Episode ``i`` always uses stream id
``i`` under the base seed and reads its draws from the same counter slots as
``run_episode`` does, so the two paths agree exactly and the result does not
depend on how chunks are spread over worker processes.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import BanditModel
from .distributions import pareto_from_uniform, standard_gamma_at
from .policy import AgentState, PinnedArm, PolicyConfig, observe, select_arm
from .posterior import alpha_from_gamma, kappa_from_uniform, mean_from_draw
from .rng import (
    PURPOSE_ALPHA,
    PURPOSE_KAPPA,
    PURPOSE_REWARD,
    PURPOSE_TIE,
    RNG_ID,
    RngStream,
    packed_counter,
    stream_keys,
    uniforms_at,
)

CHUNK_SIZE = 512
QUANTILE_LEVELS = (0.005, 0.995, 0.9995)
MODES = ("standard", "fixed-info")


class SimulationError(RuntimeError):
    """An episode failed; ``replication`` names the failing stream id."""

    def __init__(self, message: str, replication: Optional[int] = None):
        super().__init__(message, replication)
        self.message = message
        self.replication = replication

    def __str__(self) -> str:
        if self.replication is None:
            return self.message
        return f"replication {self.replication}: {self.message}"


@dataclass(frozen=True)
class Environment:
    """Pareto arms; in ``fixed-info`` mode one arm's sampled mean is its true mean.

    ``fixed-info`` needs exactly two arms.  The pinned arm defaults to the
    suboptimal one.
    """

    model: BanditModel
    mode: str = "standard"
    pinned_arm: Optional[int] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "standard":
            if self.pinned_arm is not None:
                raise ValueError("pinned_arm is only meaningful in fixed-info mode")
            return
        if self.model.n_arms != 2:
            raise ValueError("fixed-info mode requires exactly 2 arms")
        if self.pinned_arm is None:
            if not self.model.has_unique_optimum:
                raise ValueError("fixed-info mode needs a unique optimal arm to pick the pinned arm")
            object.__setattr__(self, "pinned_arm", 1 - self.model.optimal_arm)
        elif self.pinned_arm not in (0, 1):
            raise ValueError(f"pinned_arm must be 0 or 1, got {self.pinned_arm!r}")

    @property
    def pinned(self) -> dict:
        if self.mode != "fixed-info":
            return {}
        p = self.model.arms[self.pinned_arm]
        return {self.pinned_arm: PinnedArm(p.alpha, float(self.model.means[self.pinned_arm]))}

    def reward(self, arm: int, u: float) -> float:
        p = self.model.arms[arm]
        return float(pareto_from_uniform(p.kappa, p.alpha, u))


@dataclass
class RegretTrajectory:
    regret: np.ndarray  # cumulative pseudo-regret after each round
    arms: np.ndarray  # arm played in each round
    counts: np.ndarray  # plays per arm at the end

    @property
    def final(self) -> float:
        return float(self.regret[-1])


def run_episode(
    env: Environment,
    cfg: PolicyConfig,
    horizon: int,
    rng: RngStream,
    policy: Optional[Callable[[AgentState, RngStream], int]] = None,
) -> RegretTrajectory:
    """Play ``horizon`` rounds and return the cumulative pseudo-regret path.

    ``policy`` replaces STS/STS-T with any ``(state, rng) -> arm`` rule
    (e.g. ``uniform_random_arm``); the reward is still drawn from the
    round's reward slot.
    """
    state = AgentState.initial(env.model.n_arms, cfg)
    if policy is None and horizon < state.init_rounds:
        raise ValueError(f"horizon {horizon} is shorter than the {state.init_rounds} initialization rounds")
    gaps = env.model.gaps
    pinned = env.pinned
    regret = np.empty(horizon)
    arms = np.empty(horizon, dtype=np.int64)
    total = 0.0
    for i in range(horizon):
        t = state.t
        if policy is None:
            arm, _ = select_arm(state, cfg, rng, pinned=pinned)
        else:
            arm = policy(state, rng)
        r = env.reward(arm, rng.slot(t, PURPOSE_REWARD).uniform())
        state = observe(state, arm, r)
        total += gaps[arm]
        regret[i] = total
        arms[i] = arm
    return RegretTrajectory(regret, arms, np.array(state.counts))


def geometric_checkpoints(horizon: int, ratio: float = 1.3) -> list:
    """Rounds ``round(ratio**i)`` up to the horizon, always ending at the horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    points = {1, horizon}
    x = 1.0
    while x <= horizon:
        points.add(int(round(x)))
        x *= ratio
    return sorted(p for p in points if 1 <= p <= horizon)


def quantiles(values, levels: Sequence[float] = QUANTILE_LEVELS) -> np.ndarray:
    """Empirical quantiles by linear interpolation between order statistics.

    For sorted ``x[0..n-1]`` the level-``q`` quantile is read at position
    ``q * (n - 1)`` (type 7).  Works column-wise on 2-D input.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("quantiles of an empty sample")
    return np.quantile(values, levels, axis=0, method="linear")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(obj) -> str:
    """Stable hash of a JSON-able description (first 16 hex digits of SHA-256)."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def run_description(env: Environment, cfg: PolicyConfig, horizon: int, replications: int,
                    base_seed: int, checkpoints: Sequence[int]) -> dict:
    """Everything that determines an experiment's output, in canonical form."""
    return {
        "model": {
            "kappa": [p.kappa for p in env.model.arms],
            "alpha": [p.alpha for p in env.model.arms],
        },
        "mode": env.mode,
        "pinned_arm": env.pinned_arm,
        "policy": {"k": cfg.k, "truncate": cfg.truncate, "tie_break": cfg.tie_break},
        "horizon": int(horizon),
        "replications": int(replications),
        "seed": int(base_seed),
        "checkpoints": [int(c) for c in checkpoints],
        "rng": RNG_ID,
    }


@dataclass
class RegretAggregate:
    checkpoints: np.ndarray
    mean: np.ndarray
    std: np.ndarray  # population std (ddof=0) across replications
    q_low: np.ndarray  # 0.5% quantile
    q_high: np.ndarray  # 99.5% quantile
    q_tail: np.ndarray  # 99.95% quantile
    replications: int
    fingerprint: str
    samples: Optional[np.ndarray] = field(default=None, repr=False)  # (replications, checkpoints)

    CSV_COLUMNS = ("round", "mean", "std", "q005", "q995", "q9995")

    def at(self, t: int) -> dict:
        i = int(np.searchsorted(self.checkpoints, t))
        if i == len(self.checkpoints) or self.checkpoints[i] != t:
            raise KeyError(f"round {t} is not a checkpoint")
        return {
            "round": t,
            "mean": float(self.mean[i]),
            "std": float(self.std[i]),
            "q005": float(self.q_low[i]),
            "q995": float(self.q_high[i]),
            "q9995": float(self.q_tail[i]),
        }

    def to_csv(self) -> str:
        """CSV text: a fingerprint comment line, the frozen header, one row per checkpoint."""
        lines = [f"# config_fingerprint={self.fingerprint}", ",".join(self.CSV_COLUMNS)]
        for row in zip(self.checkpoints, self.mean, self.std, self.q_low, self.q_high, self.q_tail):
            lines.append(str(int(row[0])) + "," + ",".join(format(float(v), ".17g") for v in row[1:]))
        return "\n".join(lines) + "\n"


def _aggregate(samples: np.ndarray, checkpoints, fp: str, keep_samples: bool) -> RegretAggregate:
    q = quantiles(samples)
    # summation rounding can push the mean of a constant column one ulp outside it
    mean = np.clip(samples.mean(axis=0), samples.min(axis=0), samples.max(axis=0))
    return RegretAggregate(
        checkpoints=np.asarray(checkpoints, dtype=np.int64),
        mean=mean,
        std=samples.std(axis=0),
        q_low=q[0],
        q_high=q[1],
        q_tail=q[2],
        replications=samples.shape[0],
        fingerprint=fp,
        samples=samples if keep_samples else None,
    )


def run_experiment(
    env: Environment,
    cfg: PolicyConfig,
    horizon: int,
    replications: int,
    base_seed: int,
    checkpoints: Optional[Sequence[int]] = None,
    parallelism: int = 1,
    keep_samples: bool = False,
) -> RegretAggregate:
    """Run independent episodes and aggregate their regret at checkpoint rounds.

    Replication ``i`` uses ``RngStream(base_seed, i)``.  Output is identical
    for any ``parallelism``.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    init_rounds = env.model.n_arms * cfg.n_bar
    if horizon < init_rounds:
        raise ValueError(f"horizon {horizon} is shorter than the {init_rounds} initialization rounds")
    checkpoints = geometric_checkpoints(horizon) if checkpoints is None else sorted(set(int(c) for c in checkpoints))
    if not checkpoints or checkpoints[0] < 1 or checkpoints[-1] > horizon:
        raise ValueError("checkpoints must lie in [1, horizon]")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    job = _ChunkJob.build(env, cfg, horizon, base_seed, checkpoints)
    chunks = [np.arange(s, min(s + CHUNK_SIZE, replications)) for s in range(0, replications, CHUNK_SIZE)]
    if parallelism == 1 or len(chunks) == 1:
        parts = [job.run(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=min(parallelism, len(chunks))) as pool:
            parts = list(pool.map(job.run, chunks))
    samples = np.concatenate(parts, axis=0)
    fp = fingerprint(run_description(env, cfg, horizon, replications, base_seed, checkpoints))
    return _aggregate(samples, checkpoints, fp, keep_samples)


@dataclass(frozen=True)
class _ChunkJob:
    """Picklable description of the vectorized episode loop."""

    kappa: np.ndarray
    alpha: np.ndarray
    gaps: np.ndarray
    k: int
    truncate: bool
    tie_break: str
    horizon: int
    seed: int
    checkpoints: tuple
    pinned_arm: int  # -1 when none
    pinned_alpha: float
    pinned_mean: float
    n_bar: int

    @classmethod
    def build(cls, env: Environment, cfg: PolicyConfig, horizon: int, seed: int, checkpoints) -> "_ChunkJob":
        pinned = env.pinned
        p = next(iter(pinned.items()), None)
        return cls(
            kappa=np.array([a.kappa for a in env.model.arms]),
            alpha=np.array([a.alpha for a in env.model.arms]),
            gaps=np.asarray(env.model.gaps, dtype=float),
            k=cfg.k,
            truncate=cfg.truncate,
            tie_break=cfg.tie_break,
            horizon=int(horizon),
            seed=int(seed),
            checkpoints=tuple(checkpoints),
            pinned_arm=-1 if p is None else p[0],
            pinned_alpha=math.nan if p is None else p[1].alpha,
            pinned_mean=math.nan if p is None else p[1].mean,
            n_bar=cfg.n_bar,
        )

    def _random_ties(self, values, best, choice, keys, t):
        ties = values == best[:, None]
        multi = np.flatnonzero(ties.sum(axis=1) > 1)
        if multi.size:
            u = uniforms_at(keys[multi], np.uint64(packed_counter(t, PURPOSE_TIE)))
            for row, ui in zip(multi, u):
                idx = np.flatnonzero(ties[row])
                choice[row] = idx[min(int(ui * len(idx)), len(idx) - 1)]
        return choice

    def run(self, reps: np.ndarray) -> np.ndarray:
        """Cumulative regret at each checkpoint for replications ``reps``."""
        R, K = len(reps), len(self.kappa)
        keys = stream_keys(self.seed, reps)
        kcol = keys[:, None]
        rows = np.arange(R)
        n = np.zeros((R, K))
        min_r = np.full((R, K), np.inf)
        log_min = np.full((R, K), np.inf)
        sum_log = np.zeros((R, K))
        cum = np.zeros(R)
        out = np.empty((R, len(self.checkpoints)))
        ci = 0
        init_rounds = K * self.n_bar
        arm_slots = np.arange(K, dtype=np.uint64) << np.uint64(12)
        alpha_slots = (np.uint64(PURPOSE_ALPHA) << np.uint64(22)) + arm_slots
        kappa_slots = (np.uint64(PURPOSE_KAPPA) << np.uint64(22)) + arm_slots
        reward_slot = np.uint64(PURPOSE_REWARD) << np.uint64(22)

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for t in range(1, self.horizon + 1):
                tbase = np.uint64(t) << np.uint64(24)
                if t <= init_rounds:
                    choice = np.full(R, (t - 1) % K)
                else:
                    choice = self._sample_choice(t, tbase, kcol, keys, n, min_r, log_min, sum_log,
                                                 alpha_slots, kappa_slots, reps)
                u = uniforms_at(keys, tbase + reward_slot)
                r = pareto_from_uniform(self.kappa[choice], self.alpha[choice], u)
                lr = np.log(r)
                n[rows, choice] += 1.0
                sum_log[rows, choice] += lr
                lower = r < min_r[rows, choice]
                lr_rows, lr_arms = rows[lower], choice[lower]
                min_r[lr_rows, lr_arms] = r[lower]
                log_min[lr_rows, lr_arms] = lr[lower]
                cum += self.gaps[choice]
                if ci < len(self.checkpoints) and t == self.checkpoints[ci]:
                    out[:, ci] = cum
                    ci += 1
        return out

    def _sample_choice(self, t, tbase, kcol, keys, n, min_r, log_min, sum_log, alpha_slots, kappa_slots, reps):
        pa = self.pinned_arm
        denom = sum_log - n * log_min
        alpha_hat = np.where(denom > 0, n / denom, np.inf)
        alpha_ref = np.minimum(n, alpha_hat) if self.truncate else alpha_hat
        bad = ~np.isfinite(alpha_ref)
        if pa >= 0:
            bad[:, pa] = False
        if bad.any():
            row = int(np.flatnonzero(bad.any(axis=1))[0])
            raise SimulationError(
                f"round {t}: all rewards of an arm are equal, shape MLE is infinite "
                "and the STS Erlang rate would be zero",
                int(reps[row]),
            )
        if pa >= 0:
            alpha_ref[:, pa] = 1.0  # placeholder; the draw is overwritten below
        g, _ = standard_gamma_at(n - self.k, kcol, tbase + alpha_slots[None, :])
        at = alpha_from_gamma(g, n, alpha_ref)
        if pa >= 0:
            at[:, pa] = self.pinned_alpha

        amin = at.min(axis=1)
        use_min = amin <= 1.0
        choice = np.argmin(at, axis=1)
        if self.tie_break == "random":
            choice = self._random_ties(at, amin, choice, keys, t) if use_min.any() else choice

        if not use_min.all():
            u = uniforms_at(kcol, tbase + kappa_slots[None, :])
            kt = kappa_from_uniform(min_r, n, at, u)
            mu = mean_from_draw(kt, at)
            if pa >= 0:
                mu[:, pa] = self.pinned_mean
            best = np.argmax(mu, axis=1)
            if self.tie_break == "random":
                best = self._random_ties(mu, mu.max(axis=1), best, keys, t)
            choice = np.where(use_min, choice, best)
        return choice
