"""Episode configuration file handling.

The episode config is UTF-8 JSON combining a scenario path with the planner,
scorer, detector, sensor, simulation, and prior-map blocks. Every block is
optional and falls back to the documented defaults; unknown keys are rejected
so typos never pass silently.
"""

from __future__ import annotations

import json
from dataclasses import Field, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .episode import DetectorConfig, SensorConfig, SimConfig
from .evidence import DEFAULT_PROMPT_WEIGHTS, ScorerConfig
from .planner import PlannerConfig, UtilityWeights
from .prior import IGMConfig


def _build(cls, obj: dict, where: str):
    if not isinstance(obj, dict):
        raise ValueError(f"config block '{where}' must be an object")
    known: dict[str, Field] = {f.name: f for f in fields(cls)}
    unknown = sorted(set(obj) - set(known))
    if unknown:
        raise ValueError(f"unknown key(s) in config block '{where}': {', '.join(unknown)}")
    kwargs = {}
    for key, value in obj.items():
        if key == "weights" and cls is PlannerConfig:
            kwargs[key] = _build(UtilityWeights, value, f"{where}.weights")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


@dataclass(frozen=True)
class EpisodeSettings:
    """Everything needed to run one configured episode except the seeds."""

    scenario: str = ""
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    igm: IGMConfig = field(default_factory=IGMConfig)
    prompt_weights: tuple[float, float, float, float] = DEFAULT_PROMPT_WEIGHTS


_BLOCKS = {
    "planner": PlannerConfig,
    "detector": DetectorConfig,
    "sensor": SensorConfig,
    "sim": SimConfig,
    "scorer": ScorerConfig,
    "igm": IGMConfig,
}


def episode_settings_from_dict(obj: dict) -> EpisodeSettings:
    if not isinstance(obj, dict):
        raise ValueError("episode config must be a JSON object")
    unknown = sorted(set(obj) - set(_BLOCKS) - {"scenario", "prompt_weights"})
    if unknown:
        raise ValueError(f"unknown key(s) in episode config: {', '.join(unknown)}")
    kwargs = {}
    if "scenario" in obj:
        kwargs["scenario"] = str(obj["scenario"])
    if "prompt_weights" in obj:
        kwargs["prompt_weights"] = tuple(obj["prompt_weights"])
    for name, cls in _BLOCKS.items():
        if name in obj:
            kwargs[name] = _build(cls, obj[name], name)
    return EpisodeSettings(**kwargs)


def episode_settings_to_dict(settings: EpisodeSettings) -> dict:
    def clean(value):
        if is_dataclass(value) and not isinstance(value, type):
            value = asdict(value)
        if isinstance(value, dict):
            return {k: clean(v) for k, v in value.items()}
        if isinstance(value, (tuple, list)):
            return [clean(v) for v in value]
        return value

    out = {"scenario": settings.scenario}
    for name in _BLOCKS:
        out[name] = clean(getattr(settings, name))
    out["prompt_weights"] = list(settings.prompt_weights)
    return out


def load_episode_settings(path: str | Path) -> EpisodeSettings:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return episode_settings_from_dict(obj)
