"""Fit featurizers on the training split and turn a dataset into model inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError
from .featurize import (
    CategoryEncoder,
    TfidfVocabulary,
    ZScoreScaler,
    fit_category_encoder,
    onehot,
    tfidf_fit,
    tfidf_transform,
    zscore_apply,
    zscore_fit,
)
from .graph import EnterpriseGraph, build_knn_graph
from .train import Split


@dataclass
class Featurizer:
    scaler: ZScoreScaler
    encoder: CategoryEncoder
    vocab: TfidfVocabulary | None
    k: int = 5

    @classmethod
    def fit(cls, ds: Dataset, train_idx, k: int = 5, max_features: int = 1000,
            min_df: int = 5, use_text: bool = True) -> "Featurizer":
        idx = np.asarray(train_idx, dtype=np.intp)
        train = ds.subset(idx)
        vocab = None
        if use_text and ds.tokens is not None:
            vocab = tfidf_fit(train.tokens, max_features, min_df)
            if len(vocab) == 0:
                raise ConfigError(f"no term reaches min_df={min_df} in the training documents")
        return cls(
            zscore_fit(train.structured),
            fit_category_encoder(train.industry, train.region),
            vocab,
            k,
        )

    def transform(self, ds: Dataset) -> dict[str, np.ndarray]:
        feats = {
            "S": zscore_apply(self.scaler, ds.structured),
            "G": self.encoder.industry_onehot(ds.industry),
        }
        if self.vocab is not None and ds.tokens is not None:
            feats["T"] = tfidf_transform(self.vocab, ds.tokens)
        return feats

    def profiles(self, ds: Dataset) -> np.ndarray:
        return onehot(self.encoder, ds.industry, ds.region)

    def build_graph(self, ds: Dataset) -> EnterpriseGraph:
        return build_knn_graph(self.profiles(ds), self.k)

    def to_dict(self) -> dict:
        return {
            "scaler": self.scaler.to_dict(),
            "encoder": self.encoder.to_dict(),
            "vocab": None if self.vocab is None else self.vocab.to_dict(),
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Featurizer":
        return cls(
            ZScoreScaler.from_dict(d["scaler"]),
            CategoryEncoder.from_dict(d["encoder"]),
            None if d.get("vocab") is None else TfidfVocabulary.from_dict(d["vocab"]),
            int(d["k"]),
        )


@dataclass
class Prepared:
    features: dict[str, np.ndarray]
    graph: EnterpriseGraph
    labels: np.ndarray
    split: Split
    featurizer: Featurizer


def prepare(ds: Dataset, split: Split, k: int = 5, max_features: int = 1000,
            min_df: int = 5, use_text: bool = True) -> Prepared:
    if ds.labels is None:
        raise ConfigError("preparing a training set needs labels")
    fz = Featurizer.fit(ds, split.train, k, max_features, min_df, use_text)
    return Prepared(fz.transform(ds), fz.build_graph(ds), ds.labels.astype(np.float64), split, fz)
