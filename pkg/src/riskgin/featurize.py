"""Modality featurizers: Z-score for ratios, TF-IDF for disclosures, one-hot
for industry/region codes. All ``*_fit`` functions must only ever see
training rows."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ShapeError
from .numcore import as_matrix

STRUCTURED_FIELDS = ("roa", "debt_to_asset", "asset_turnover", "cash_flow_ratio", "net_asset_growth")

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class StructuredRecord:
    enterprise_id: str
    roa: float
    debt_to_asset: float
    asset_turnover: float
    cash_flow_ratio: float
    net_asset_growth: float

    def ratios(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in STRUCTURED_FIELDS)


@dataclass(frozen=True)
class ZScoreScaler:
    mean: np.ndarray
    std: np.ndarray  # population std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ZScoreScaler":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def zscore_fit(x) -> ZScoreScaler:
    x = as_matrix(x)
    if x.shape[0] < 1:
        raise ConfigError("zscore_fit needs at least one row")
    return ZScoreScaler(x.mean(axis=0), x.std(axis=0))


def zscore_apply(scaler: ZScoreScaler, x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[1] != scaler.mean.shape[0]:
        raise ShapeError(f"scaler fitted on {scaler.mean.shape[0]} columns, got {x.shape[1]}")
    flat = scaler.std < STD_FLOOR
    safe = np.where(flat, 1.0, scaler.std)
    out = (x - scaler.mean) / safe
    out[:, flat] = 0.0
    return out


@dataclass(frozen=True)
class TfidfVocabulary:
    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]
    n_docs: int

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def idf(self) -> np.ndarray:
        df = np.asarray(self.doc_freq, dtype=np.float64)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0

    def to_dict(self) -> dict:
        return {"terms": list(self.terms), "doc_freq": list(self.doc_freq), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfVocabulary":
        return cls(tuple(d["terms"]), tuple(int(x) for x in d["doc_freq"]), int(d["n_docs"]))


def tfidf_fit(corpus: Sequence[Sequence[str]], max_features: int = 1000, min_df: int = 5) -> TfidfVocabulary:
    """Keep terms with document frequency >= ``min_df``; at most
    ``max_features`` of them, highest df first, ties broken alphabetically."""
    if len(corpus) == 0:
        raise ConfigError("tfidf_fit: empty corpus")
    if max_features < 1 or min_df < 1:
        raise ConfigError(f"tfidf_fit: max_features={max_features}, min_df={min_df} must be >= 1")
    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(doc))
    eligible = [(t, c) for t, c in df.items() if c >= min_df]
    eligible.sort(key=lambda tc: (-tc[1], tc[0]))
    kept = eligible[:max_features]
    return TfidfVocabulary(tuple(t for t, _ in kept), tuple(c for _, c in kept), len(corpus))


def tfidf_transform(vocab: TfidfVocabulary, corpus: Sequence[Sequence[str]]) -> np.ndarray:
    """tf = count/len(doc), smoothed idf, then each nonzero row L2-normalized.
    Tokens outside the vocabulary are ignored (but still count toward len)."""
    index = vocab.index
    out = np.zeros((len(corpus), len(vocab)))
    for i, doc in enumerate(corpus):
        if not doc:
            continue
        for term, count in Counter(doc).items():
            j = index.get(term)
            if j is not None:
                out[i, j] = count / len(doc)
    out *= vocab.idf()
    norms = np.sqrt(np.einsum("ij,ij->i", out, out))
    nz = norms > 0
    out[nz] /= norms[nz, None]
    return out


@dataclass(frozen=True)
class CategoryEncoder:
    industries: tuple[str, ...]
    regions: tuple[str, ...]

    @property
    def width(self) -> int:
        return len(self.industries) + len(self.regions)

    def industry_onehot(self, industries: Sequence[str]) -> np.ndarray:
        return _onehot(self.industries, industries)

    def region_onehot(self, regions: Sequence[str]) -> np.ndarray:
        return _onehot(self.regions, regions)

    def to_dict(self) -> dict:
        return {"industries": list(self.industries), "regions": list(self.regions)}

    @classmethod
    def from_dict(cls, d: dict) -> "CategoryEncoder":
        return cls(tuple(d["industries"]), tuple(d["regions"]))


def _onehot(categories: tuple[str, ...], values: Sequence[str]) -> np.ndarray:
    lookup = {c: i for i, c in enumerate(categories)}
    out = np.zeros((len(values), len(categories)))
    for row, v in enumerate(values):
        j = lookup.get(v)
        if j is not None:  # unseen category -> zero block
            out[row, j] = 1.0
    return out


def fit_category_encoder(industries: Iterable[str], regions: Iterable[str]) -> CategoryEncoder:
    return CategoryEncoder(tuple(sorted(set(industries))), tuple(sorted(set(regions))))


def onehot(encoder: CategoryEncoder, industries: Sequence[str], regions: Sequence[str]) -> np.ndarray:
    """[industry block | region block], one 1 per known category."""
    if len(industries) != len(regions):
        raise ShapeError(f"onehot: {len(industries)} industries vs {len(regions)} regions")
    return np.hstack([encoder.industry_onehot(industries), encoder.region_onehot(regions)])

