"""Run configuration: one YAML document shared by every subcommand."""

from __future__ import annotations

import dataclasses
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .nets import DiscriminatorConfig, GeneratorConfig
from .training import TrainingConfig

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    domain_a_dir: str = ""
    domain_b_dir: str = ""
    image_size: int = 64
    sampling_ratio: float = 1.0  # fraction of each training quarter actually used
    stride: int = 1              # keep every stride-th image when loading


@dataclass
class SynthConfig:
    count: int = 2000
    size: int = 64
    step: int = 0                # scroll pixels per frame; 0 picks size // 20
    stationary_runs: int = 0


@dataclass
class MatchConfig:
    direction: str = "B2A"       # queries from the first domain, translated into the second
    translate_queries: bool = True
    lengths: list[int] = field(default_factory=lambda: [1, 2, 5, 10])
    threshold_grid: int = 200
    tolerance_frames: int = 2
    normalize_order: str = "pre"
    max_frames: int = 0          # 0 uses every loaded frame
    heatmap_clip: float = 1.0

    def validate(self) -> None:
        if self.direction not in ("A2B", "B2A"):
            raise ConfigError(f"matching.direction must be A2B or B2A, got {self.direction!r}")
        if not self.lengths or min(self.lengths) < 1:
            raise ConfigError(f"matching.lengths must be positive integers, got {self.lengths}")
        if self.threshold_grid < 2:
            raise ConfigError("matching.threshold_grid needs at least 2 points")
        if self.normalize_order not in ("pre", "post"):
            raise ConfigError(f"matching.normalize_order must be pre or post, got {self.normalize_order!r}")


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    matching: MatchConfig = field(default_factory=MatchConfig)

    def validate(self) -> None:
        try:
            self.generator.validate()
            self.discriminator.validate()
            self.training.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.matching.validate()
        if self.generator.input_size != self.data.image_size or self.discriminator.input_size != self.data.image_size:
            raise ConfigError("generator.input_size, discriminator.input_size and data.image_size must agree")


def _build(cls, values, path: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping, got {type(values).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown config key: {where}")
        default = getattr(cls(), key)
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, where)
        else:
            kwargs[key] = _coerce(default, value, where)
    return cls(**kwargs)


def _coerce(default, value, where):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{where} must be a list of integers, got {value!r}")
        return list(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    return value


def parse_config(text: str) -> RunConfig:
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    config = _build(RunConfig, raw, "")
    if config.version != CONFIG_VERSION:
        raise ConfigError(f"config version {config.version} is not supported (expected {CONFIG_VERSION})")
    config.validate()
    return config


def render_config(config: RunConfig) -> str:
    return yaml.safe_dump(asdict(config), sort_keys=False)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
