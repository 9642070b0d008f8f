"""Flat run configuration shared by every command.

A config file is a single JSON object of scalar keys; anything not given keeps
its default. One ``seed`` drives data generation, splitting and initialization.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .synthdata import SynthConfig
from .train import SplitSpec, TrainConfig

SCHEMA_VERSION = 1

_SPLIT_KEYS = {"train_fraction": "train", "val_fraction": "val", "test_fraction": "test",
               "stratified": "stratified"}


@dataclass(frozen=True)
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    variant: str = "V3"
    k: int = 5
    max_features: int = 1000
    min_df: int = 5
    threshold: float = 0.5
    flag_threshold: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.max_features < 1 or self.min_df < 1:
            raise ConfigError("k, max_features and min_df must be >= 1")
        for name in ("threshold", "flag_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    @classmethod
    def from_flat(cls, flat: dict | None = None, seed: int | None = None) -> "RunConfig":
        flat = dict(flat or {})
        if seed is not None:
            flat["seed"] = seed
        synth_names = {f.name for f in fields(SynthConfig)} - {"seed"}
        train_names = {f.name for f in fields(TrainConfig)} - {"seed"}
        top_names = {f.name for f in fields(cls)} - {"synth", "train", "split"}
        synth, train, split, top = {}, {}, {}, {}
        for key, val in flat.items():
            if isinstance(val, (dict, list)):
                raise ConfigError(f"config key {key!r}: nested values are not allowed")
            if key in synth_names:
                synth[key] = val
            elif key in train_names:
                train[key] = val
            elif key in _SPLIT_KEYS:
                split[_SPLIT_KEYS[key]] = val
            elif key in top_names:
                top[key] = val
            else:
                raise ConfigError(f"unknown config key {key!r}")
        s = int(top.get("seed", 0))
        if s < 0:
            raise ConfigError(f"seed must be >= 0, got {s}")
        top["seed"] = s
        try:
            return cls(SynthConfig(seed=s, **synth), TrainConfig(seed=s, **train),
                       SplitSpec(seed=s, **split), **top)
        except TypeError as exc:
            raise ConfigError(f"bad config value: {exc}") from None

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig.from_flat(self.to_flat(), seed=seed)

    def to_flat(self) -> dict:
        out = {}
        out.update({k: v for k, v in asdict(self.synth).items() if k != "seed"})
        out.update({k: v for k, v in asdict(self.train).items() if k != "seed"})
        out.update({key: getattr(self.split, attr) for key, attr in _SPLIT_KEYS.items()})
        for f in fields(self):
            if f.name not in ("synth", "train", "split"):
                out[f.name] = getattr(self, f.name)
        return dict(sorted(out.items()))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_flat(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def stamp(self) -> dict:
        """Provenance fields embedded in every artifact."""
        return {"schema_version": SCHEMA_VERSION, "seed": self.seed, "config_hash": self.config_hash()}

    def stamp_line(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.stamp().items())


def load_config(path=None, seed: int | None = None, **overrides) -> RunConfig:
    flat = {}
    if path is not None:
        try:
            flat = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(flat, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    flat.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_flat(flat, seed=seed)

