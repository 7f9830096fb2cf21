"""Run configuration: schema, baseline defaults, validation, file loading."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

PROVIDER_KINDS = ("heuristic", "llm", "replay")
INTELLIGENCE_MODES = ("temperature", "top_p")
TRAIT_FAMILIES = ("normal", "uniform")
SPREAD_KINDS = ("std", "variance")

AGGRESSIVENESS_RANGE = (-1.0, 1.0)
COVETOUSNESS_RANGE = (1.1, 1.6)


class ConfigError(ValueError):
    """Invalid or out-of-range configuration value."""


@dataclass(frozen=True)
class TraitDist:
    """Sampling recipe for one trait: family, location, spread, optional clamp."""

    mean: float
    spread: float
    family: str = "normal"
    spread_is: str = "std"
    clamp: tuple[float, float] | None = None

    def validate(self, path: str) -> None:
        if self.spread <= 0:
            raise ConfigError(f"{path}.spread must be > 0, got {self.spread}")
        if self.family not in TRAIT_FAMILIES:
            raise ConfigError(f"{path}.family must be one of {TRAIT_FAMILIES}, got {self.family!r}")
        if self.spread_is not in SPREAD_KINDS:
            raise ConfigError(f"{path}.spread_is must be one of {SPREAD_KINDS}, got {self.spread_is!r}")
        if self.clamp is not None and self.clamp[0] >= self.clamp[1]:
            raise ConfigError(f"{path}.clamp must be (lo, hi) with lo < hi, got {self.clamp}")


@dataclass(frozen=True)
class TraitConfig:
    aggressiveness: TraitDist = TraitDist(0.0, 1.0, clamp=AGGRESSIVENESS_RANGE)
    covetousness: TraitDist = TraitDist(1.25, 5.0, clamp=COVETOUSNESS_RANGE)
    strength: TraitDist = TraitDist(0.2, 0.7)

    def validate(self) -> None:
        self.aggressiveness.validate("traits.aggressiveness")
        self.covetousness.validate("traits.covetousness")
        self.strength.validate("traits.strength")


@dataclass(frozen=True)
class DesireConfig:
    peace: float = 1.0
    glory: float = 1.0

    def validate(self) -> None:
        if self.peace <= 0 or self.glory <= 0:
            raise ConfigError("desires.peace and desires.glory must be > 0")


@dataclass(frozen=True)
class IntelligenceConfig:
    """Per-agent decoding parameters stand in for intelligence.

    ``temperature`` mode samples temperature = 2 x Beta(a, b) with top_p 1;
    ``top_p`` mode samples top_p = Beta(a, b) with temperature 1. Either way
    the draw is fixed at world init and held constant for the whole run.
    """

    mode: str = "temperature"
    beta_a: float = 50.0
    beta_b: float = 50.0

    def validate(self) -> None:
        if self.mode not in INTELLIGENCE_MODES:
            raise ConfigError(f"intelligence.mode must be one of {INTELLIGENCE_MODES}, got {self.mode!r}")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ConfigError("intelligence.beta_a and beta_b must be > 0")


@dataclass(frozen=True)
class HeuristicConfig:
    """Tunable thresholds of the scripted provider (engine defaults, overridable)."""

    rob_aggressiveness_threshold: float = 0.3
    food_reserve_days: float = 2.0
    rob_amount: float = 2.0
    trade_amount: float = 1.0

    def validate(self) -> None:
        if self.rob_amount <= 0 or self.trade_amount <= 0:
            raise ConfigError("heuristic.rob_amount and trade_amount must be > 0")
        if self.food_reserve_days < 0:
            raise ConfigError("heuristic.food_reserve_days must be >= 0")


@dataclass(frozen=True)
class LlmConfig:
    """Transport settings for any OpenAI-style chat-completions endpoint."""

    base_url: str | None = None
    model: str = "gpt-3.5-turbo"
    api_key_env: str = "POLIS_API_KEY"
    timeout_s: float = 60.0
    max_attempts: int = 3
    backoff_s: float = 0.5
    max_tokens_initiative: int = 512
    max_tokens_response: int = 16
    prompt_char_budget: int = 24000
    transport_failure: str = "abort"  # abort | fallback

    def validate(self) -> None:
        if self.max_attempts < 1:
            raise ConfigError("llm.max_attempts must be >= 1")
        if self.timeout_s <= 0 or self.backoff_s < 0:
            raise ConfigError("llm.timeout_s must be > 0 and llm.backoff_s >= 0")
        if self.max_tokens_initiative < 1 or self.max_tokens_response < 1:
            raise ConfigError("llm.max_tokens_* must be >= 1")
        if self.prompt_char_budget < 1000:
            raise ConfigError("llm.prompt_char_budget must be >= 1000")
        if self.transport_failure not in ("abort", "fallback"):
            raise ConfigError("llm.transport_failure must be 'abort' or 'fallback'")


@dataclass(frozen=True)
class SimConfig:
    """Complete run configuration; the defaults reproduce the baseline world.

    Baseline: 9 agents, 2 food / 10 land each, memory depth 30, one unit of
    food consumed per agent per day.
    """

    population: int = 9
    initial_food: float = 2.0
    initial_land: float = 10.0
    memory_depth: int = 30
    daily_consumption: float = 1.0
    max_days: int = 100
    seed: int = 0
    provider: str = "heuristic"
    provider_per_agent: dict[int, str] = field(default_factory=dict)
    traits: TraitConfig = TraitConfig()
    desires: DesireConfig = DesireConfig()
    intelligence: IntelligenceConfig = IntelligenceConfig()
    heuristic: HeuristicConfig = HeuristicConfig()
    llm: LlmConfig = LlmConfig()
    erase_memory_on_role_change: bool = False
    shuffle_turn_order: bool = False
    parse_retries: int = 2

    def validate(self) -> "SimConfig":
        if self.population < 2:
            raise ConfigError(f"population must be >= 2, got {self.population}")
        if self.initial_food < 0 or self.initial_land < 0:
            raise ConfigError("initial_food and initial_land must be >= 0")
        if self.memory_depth < 1:
            raise ConfigError(f"memory_depth must be >= 1, got {self.memory_depth}")
        if self.daily_consumption < 0:
            raise ConfigError("daily_consumption must be >= 0")
        if self.max_days < 1:
            raise ConfigError(f"max_days must be >= 1, got {self.max_days}")
        if self.parse_retries < 0:
            raise ConfigError("parse_retries must be >= 0")
        if self.provider not in PROVIDER_KINDS:
            raise ConfigError(f"provider must be one of {PROVIDER_KINDS}, got {self.provider!r}")
        for agent_id, kind in self.provider_per_agent.items():
            if kind not in PROVIDER_KINDS:
                raise ConfigError(f"provider_per_agent[{agent_id}] must be one of {PROVIDER_KINDS}")
            if not 0 <= agent_id < self.population:
                raise ConfigError(f"provider_per_agent key {agent_id} outside population")
        self.traits.validate()
        self.desires.validate()
        self.intelligence.validate()
        self.heuristic.validate()
        self.llm.validate()
        return self


def _build(default: Any, data: dict[str, Any], path: str) -> Any:
    """Overlay a plain dict onto a default dataclass instance, rejecting unknown keys.

    Partial overrides keep the untouched defaults, including nested ones
    (e.g. setting a trait's mean leaves its baseline clamp in place).
    """
    known = {f.name: f for f in fields(default)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) at {path or 'top level'}: {', '.join(sorted(unknown))}")
    kwargs: dict[str, Any] = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        current = getattr(default, name)
        if dataclasses.is_dataclass(current) and not isinstance(current, type):
            if not isinstance(value, dict):
                raise ConfigError(f"{sub} must be a mapping")
            kwargs[name] = _build(current, value, sub)
        elif name == "clamp":
            if value is None:
                kwargs[name] = None
            elif isinstance(value, (list, tuple)) and len(value) == 2:
                kwargs[name] = (float(value[0]), float(value[1]))
            else:
                raise ConfigError(f"{sub} must be null or a [lo, hi] pair")
        elif name == "provider_per_agent":
            if not isinstance(value, dict):
                raise ConfigError(f"{sub} must be a mapping of agent id to provider kind")
            kwargs[name] = {int(k): str(v) for k, v in value.items()}
        else:
            kwargs[name] = value
    try:
        return dataclasses.replace(default, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad value near {path or 'top level'}: {exc}") from exc


def config_from_dict(data: dict[str, Any] | None) -> SimConfig:
    """Build and validate a SimConfig from a plain nested dict."""
    cfg = _build(SimConfig(), data or {}, "")
    return cfg.validate()


def load_config(path: str | Path) -> SimConfig:
    """Load a YAML (or JSON) config file; empty file yields full baseline defaults."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"cannot parse {path}{where}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)


def config_to_dict(config: SimConfig) -> dict[str, Any]:
    """Plain-dict snapshot of a config, suitable for JSON/YAML round-trips."""
    out = dataclasses.asdict(config)
    for trait in out["traits"].values():
        if trait["clamp"] is not None:
            trait["clamp"] = list(trait["clamp"])
    return out


def set_config_value(config: SimConfig, path: str, value: Any) -> SimConfig:
    """Return a copy of ``config`` with the dotted ``path`` replaced by ``value``.

    Used by sweeps, e.g. ``set_config_value(cfg, "traits.aggressiveness.mean", 0.5)``.
    """
    parts = path.split(".")

    def rebuild(node: Any, remaining: list[str]) -> Any:
        name = remaining[0]
        if not dataclasses.is_dataclass(node) or name not in {f.name for f in fields(node)}:
            raise ConfigError(f"unknown config path: {path}")
        if len(remaining) == 1:
            new = value
            if name == "clamp" and isinstance(new, (list, tuple)):
                new = (float(new[0]), float(new[1]))
            return dataclasses.replace(node, **{name: new})
        child = getattr(node, name)
        return dataclasses.replace(node, **{name: rebuild(child, remaining[1:])})

    rebuilt = rebuild(config, parts)
    return rebuilt.validate()
