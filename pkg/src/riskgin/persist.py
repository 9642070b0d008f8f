"""Single-file JSON model bundles.

A bundle holds the weights, the fitted featurizer, the split (as enterprise
ids) and the run configuration. Floats are written by ``json`` with the
shortest repr that round-trips, so loading restores every parameter exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, RunConfig
from .errors import DataError, IncompatibleError, StorageError
from .model import RiskModel
from .pipeline import Featurizer

MODEL_KIND = "riskgin-model"


@dataclass
class ModelBundle:
    model: RiskModel
    featurizer: Featurizer
    split_ids: dict[str, list[str]]
    config: RunConfig
    best_epoch: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": MODEL_KIND,
            **self.config.stamp(),
            "config": self.config.to_flat(),
            "model": self.model.describe(),
            "best_epoch": self.best_epoch,
            "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                       for k, v in self.model.params.items()},
            "featurizer": self.featurizer.to_dict(),
            "split": self.split_ids,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        if d.get("kind") != MODEL_KIND:
            raise IncompatibleError("not a model file")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise IncompatibleError(
                f"model schema_version {d.get('schema_version')} != supported {SCHEMA_VERSION}"
            )
        try:
            params = {k: np.array(p["data"], dtype=np.float64).reshape(p["shape"])
                      for k, p in d["params"].items()}
            model = RiskModel.from_description(d["model"], params)
            return cls(model, Featurizer.from_dict(d["featurizer"]),
                       {k: list(v) for k, v in d["split"].items()},
                       RunConfig.from_flat(d["config"]), int(d.get("best_epoch", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model file: {exc}") from None


def save_model(bundle: ModelBundle, path) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(bundle.to_dict(), indent=1) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write model to {p}: {exc}") from exc
    return p


def load_model(path) -> ModelBundle:
    p = Path(path)
    try:
        d = json.loads(p.read_text())
    except OSError as exc:
        raise StorageError(f"cannot read model {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {p} is not valid JSON: {exc}") from None
    return ModelBundle.from_dict(d)
