"""STS and STS-T arm selection.

Each round after initialization every arm gets a shape draw ``alpha~``.  If
any ``alpha~ <= 1`` (infinite sampled mean) the arm with the smallest
``alpha~`` is played; otherwise every arm also gets a scale draw and the
arm with the largest sampled mean ``kappa~ alpha~ / (alpha~ - 1)`` is played.

Random draws are addressed by round, purpose and arm (see ``rng``), so the
same episode stream gives the same choices whether it is replayed here or
in the vectorized simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

from .estimation import ArmState, update
from .posterior import PosteriorInputs, kappa_from_uniform, mean_from_draw, sample_alpha
from .rng import PURPOSE_ALPHA, PURPOSE_KAPPA, PURPOSE_TIE, RngStream

MAX_ABS_K = 64
TIE_BREAKS = ("lowest", "random")


@dataclass(frozen=True)
class PolicyConfig:
    """Prior exponent ``k`` (0 Jeffreys, 1 reference), truncation flag, tie rule."""

    k: int = 0
    truncate: bool = False
    tie_break: str = "lowest"

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k:
            raise ValueError(f"k must be an integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if abs(self.k) > MAX_ABS_K:
            raise ValueError(f"|k| must be <= {MAX_ABS_K}, got {self.k}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {self.tie_break!r}")

    @property
    def n_bar(self) -> int:
        """Initial plays per arm, ``max(2, k + 1)``."""
        return max(2, self.k + 1)

    @property
    def name(self) -> str:
        return f"{'STS-T' if self.truncate else 'STS'}(k={self.k})"


@dataclass(frozen=True)
class PinnedArm:
    """An arm whose sampled mean is fixed to its true mean (full information)."""

    alpha: float
    mean: float


@dataclass(frozen=True)
class AgentState:
    arms: tuple
    n_bar: int
    t: int = 1  # the round about to be played

    @classmethod
    def initial(cls, n_arms: int, cfg: PolicyConfig) -> "AgentState":
        if n_arms < 1:
            raise ValueError("need at least one arm")
        return cls(tuple(ArmState() for _ in range(n_arms)), cfg.n_bar)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def init_rounds(self) -> int:
        return self.n_arms * self.n_bar

    @property
    def phase(self) -> str:
        return "initializing" if self.t <= self.init_rounds else "sampling"

    @property
    def counts(self) -> tuple:
        return tuple(a.n for a in self.arms)


@dataclass(frozen=True)
class SampleTrace:
    """What ``select_arm`` drew in one round.

    ``branch`` is ``"init"`` (round robin, nothing drawn), ``"argmin"`` (some
    ``alpha~ <= 1``) or ``"argmax"``.  ``kappa_tilde`` and ``mu_tilde`` are
    only filled on the argmax branch; a pinned arm has ``kappa_tilde`` None.
    """

    branch: str
    alpha_tilde: Optional[tuple] = None
    kappa_tilde: Optional[tuple] = None
    mu_tilde: Optional[tuple] = None


def _pick(values: Sequence[float], best: float, cfg: PolicyConfig, rng: Optional[RngStream], t: int) -> int:
    ties = [i for i, v in enumerate(values) if v == best]
    if len(ties) == 1 or cfg.tie_break == "lowest":
        return ties[0]
    u = rng.slot(t, PURPOSE_TIE).uniform()
    return ties[min(int(u * len(ties)), len(ties) - 1)]


def select_arm(
    state: AgentState,
    cfg: PolicyConfig,
    rng: Optional[RngStream],
    *,
    forced_alpha: Optional[Sequence[float]] = None,
    forced_u: Optional[Sequence[float]] = None,
    pinned: Optional[Mapping[int, PinnedArm]] = None,
) -> tuple:
    """Return ``(arm, SampleTrace)`` for round ``state.t``.

    ``forced_alpha`` / ``forced_u`` replace the shape draws / scale uniforms
    (one entry per arm) for deterministic tests.
    """
    t = state.t
    if state.phase == "initializing":
        return (t - 1) % state.n_arms, SampleTrace("init")

    pinned = pinned or {}
    alphas = []
    inputs = {}
    for a, arm in enumerate(state.arms):
        if a in pinned:
            alphas.append(pinned[a].alpha)
            continue
        inputs[a] = PosteriorInputs.from_state(arm, cfg.k, cfg.truncate)
        if forced_alpha is not None:
            alphas.append(float(forced_alpha[a]))
        else:
            alphas.append(sample_alpha(inputs[a], rng.slot(t, PURPOSE_ALPHA, a)))

    if min(alphas) <= 1:
        arm = _pick(alphas, min(alphas), cfg, rng, t)
        return arm, SampleTrace("argmin", tuple(alphas))

    kappas, mus = [], []
    for a, alpha_tilde in enumerate(alphas):
        if a in pinned:
            kappas.append(None)
            mus.append(pinned[a].mean)
            continue
        inp = inputs[a]
        u = forced_u[a] if forced_u is not None else rng.slot(t, PURPOSE_KAPPA, a).uniform()
        kappa = float(kappa_from_uniform(inp.kappa_hat, inp.n, alpha_tilde, u))
        kappas.append(kappa)
        mus.append(float(mean_from_draw(kappa, alpha_tilde)))
    arm = _pick(mus, max(mus), cfg, rng, t)
    return arm, SampleTrace("argmax", tuple(alphas), tuple(kappas), tuple(mus))


def observe(state: AgentState, arm: int, reward: float) -> AgentState:
    if not 0 <= arm < state.n_arms:
        raise IndexError(f"arm {arm} out of range for {state.n_arms} arms")
    arms = list(state.arms)
    arms[arm] = update(arms[arm], reward)
    return replace(state, arms=tuple(arms), t=state.t + 1)


def uniform_random_arm(state: AgentState, rng: RngStream) -> int:
    """Baseline: a uniformly random arm every round (harness sanity checks)."""
    u = rng.slot(state.t, PURPOSE_TIE).uniform()
    return min(int(u * state.n_arms), state.n_arms - 1)
