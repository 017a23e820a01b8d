"""Experiment configuration files.

A config is a flat TOML document::

    kappa = [1.3, 1.2, 1.3, 1.5]     # scale of each arm
    alpha = [1.4, 1.6, 1.9, 2.0]     # shape of each arm, all > 1
    k = 0                            # prior exponent
    truncate = false                 # false: STS, true: STS-T
    tie_break = "lowest"             # or "random"
    horizon = 20000
    replications = 2000
    seed = 2024
    checkpoints = "geometric"        # or an explicit list of rounds
    mode = "standard"                # or "fixed-info" (two arms)
    pinned_arm = 1                   # fixed-info only, 0-based; default: the suboptimal arm
    output = "theta4_sts_k0"         # file stem, relative to the output directory

Only ``kappa`` and ``alpha`` are required; the rest have the defaults above
(``pinned_arm`` and ``output`` default to unset).
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bounds import BanditModel, ModelError
from .distributions import ParetoParams
from .policy import MAX_ABS_K, TIE_BREAKS, PolicyConfig
from .simulator import MODES, Environment, fingerprint, geometric_checkpoints, run_description

_U64_MAX = (1 << 64) - 1


class ConfigError(ValueError):
    """A config value is missing or invalid; ``field`` names it."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    kappa: tuple
    alpha: tuple
    k: int = 0
    truncate: bool = False
    tie_break: str = "lowest"
    horizon: int = 10_000
    replications: int = 1_000
    seed: int = 0
    checkpoints: Union[str, tuple] = "geometric"
    mode: str = "standard"
    pinned_arm: Optional[int] = None
    output: Optional[str] = None

    def __post_init__(self):
        _validate(self)

    # --- derived objects -------------------------------------------------

    @property
    def model(self) -> BanditModel:
        return BanditModel(tuple(ParetoParams(k, a) for k, a in zip(self.kappa, self.alpha)))

    @property
    def policy(self) -> PolicyConfig:
        return PolicyConfig(self.k, self.truncate, self.tie_break)

    @property
    def environment(self) -> Environment:
        return Environment(self.model, self.mode, self.pinned_arm)

    def resolved_checkpoints(self) -> list:
        if self.checkpoints == "geometric":
            return geometric_checkpoints(self.horizon)
        return sorted(set(self.checkpoints))

    def run_description(self) -> dict:
        return run_description(self.environment, self.policy, self.horizon, self.replications,
                               self.seed, self.resolved_checkpoints())

    @property
    def fingerprint(self) -> str:
        """Hash of everything that determines the simulation output (not ``output``)."""
        return fingerprint(self.run_description())

    @property
    def model_fingerprint(self) -> str:
        return fingerprint({"kappa": list(self.kappa), "alpha": list(self.alpha)})

    def with_overrides(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    # --- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "kappa": list(self.kappa),
            "alpha": list(self.alpha),
            "k": self.k,
            "truncate": self.truncate,
            "tie_break": self.tie_break,
            "horizon": self.horizon,
            "replications": self.replications,
            "seed": self.seed,
            "checkpoints": self.checkpoints if isinstance(self.checkpoints, str) else list(self.checkpoints),
            "mode": self.mode,
        }
        if self.pinned_arm is not None:
            d["pinned_arm"] = self.pinned_arm
        if self.output is not None:
            d["output"] = self.output
        return d

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown config key")
        for key in ("kappa", "alpha"):
            if key not in data:
                raise ConfigError(key, "required key is missing")
        values = dict(data)
        for key in ("kappa", "alpha"):
            if not isinstance(values[key], list):
                raise ConfigError(key, "must be an array of numbers")
            values[key] = tuple(values[key])
        if isinstance(values.get("checkpoints"), list):
            values["checkpoints"] = tuple(values["checkpoints"])
        return cls(**values)

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"not valid TOML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = resolve_config_path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from exc
        return cls.from_toml(text)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _validate(cfg: ExperimentConfig) -> None:
    for name in ("kappa", "alpha"):
        values = getattr(cfg, name)
        if len(values) == 0:
            raise ConfigError(name, "needs at least one arm")
        for i, v in enumerate(values):
            if not _is_number(v) or not v > 0 or v == float("inf"):
                raise ConfigError(name, f"arm {i}: {v!r} is not a positive finite number")
    if len(cfg.kappa) != len(cfg.alpha):
        raise ConfigError("alpha", f"has {len(cfg.alpha)} entries but kappa has {len(cfg.kappa)}")
    for i, a in enumerate(cfg.alpha):
        if a <= 1:
            raise ConfigError("alpha", f"arm {i}: alpha={a} <= 1 gives an infinite mean")
    if not _is_int(cfg.k) or abs(cfg.k) > MAX_ABS_K:
        raise ConfigError("k", f"must be an integer with |k| <= {MAX_ABS_K}, got {cfg.k!r}")
    if not isinstance(cfg.truncate, bool):
        raise ConfigError("truncate", f"must be true or false, got {cfg.truncate!r}")
    if cfg.tie_break not in TIE_BREAKS:
        raise ConfigError("tie_break", f"must be one of {TIE_BREAKS}, got {cfg.tie_break!r}")
    if not _is_int(cfg.horizon) or cfg.horizon < 1:
        raise ConfigError("horizon", f"must be a positive integer, got {cfg.horizon!r}")
    init = len(cfg.kappa) * max(2, cfg.k + 1) if _is_int(cfg.k) else 0
    if cfg.horizon < init:
        raise ConfigError("horizon", f"{cfg.horizon} is shorter than the {init} initialization rounds")
    if not _is_int(cfg.replications) or cfg.replications < 1:
        raise ConfigError("replications", f"must be a positive integer, got {cfg.replications!r}")
    if not _is_int(cfg.seed) or not 0 <= cfg.seed <= _U64_MAX:
        raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {cfg.seed!r}")
    if isinstance(cfg.checkpoints, str):
        if cfg.checkpoints != "geometric":
            raise ConfigError("checkpoints", f"must be \"geometric\" or a list of rounds, got {cfg.checkpoints!r}")
    else:
        if not cfg.checkpoints:
            raise ConfigError("checkpoints", "list is empty")
        for c in cfg.checkpoints:
            if not _is_int(c) or not 1 <= c <= cfg.horizon:
                raise ConfigError("checkpoints", f"round {c!r} is not an integer in [1, horizon]")
    if cfg.mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}, got {cfg.mode!r}")
    if cfg.mode == "fixed-info":
        if len(cfg.kappa) != 2:
            raise ConfigError("mode", "fixed-info requires exactly 2 arms")
        if cfg.pinned_arm is not None and cfg.pinned_arm not in (0, 1):
            raise ConfigError("pinned_arm", f"must be 0 or 1, got {cfg.pinned_arm!r}")
        try:
            cfg.environment
        except (ValueError, ModelError) as exc:
            raise ConfigError("mode", str(exc)) from exc
    elif cfg.pinned_arm is not None:
        raise ConfigError("pinned_arm", "only allowed with mode = \"fixed-info\"")
    if cfg.output is not None and (not isinstance(cfg.output, str) or not cfg.output):
        raise ConfigError("output", "must be a non-empty string")


def bundled_configs() -> list:
    return sorted(p.name[:-5] for p in resources.files("pareto_ts.configs").iterdir() if p.name.endswith(".toml"))


def resolve_config_path(path: Union[str, Path]) -> Path:
    """A filesystem path, or the name of a bundled config (e.g. ``theta4``)."""
    p = Path(path)
    if p.exists():
        return p
    name = str(path)
    if name in bundled_configs():
        return Path(str(resources.files("pareto_ts.configs") / f"{name}.toml"))
    return p
