"""Seeded synthetic enterprises with a planted, per-modality risk signal.

Each modality can be switched on independently:

* structured: the five ratios are class-conditional Gaussians whose means
  differ by ``signal_structured`` standard units (Mahalanobis distance), along
  a direction where risky firms have lower ROA, turnover, cash flow and growth
  and higher leverage;
* text: every token is drawn from a small risk lexicon with probability
  ``q0`` for safe firms and ``q0 * exp(signal_text)`` for risky ones;
* graph: each industry has a latent riskiness ``r_j``; risky firms pick
  industry j with odds ``exp(+signal_graph * r_j)`` and safe firms with
  ``exp(-signal_graph * r_j)``, so similarity-graph neighborhoods (same
  industry and region) share labels.

Regions are always label-independent. Rows are shuffled after labeling and
ids assigned in the final order, so neither order nor ids carry signal.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError

RATIO_MEAN = np.array([0.05, 0.45, 0.80, 0.10, 0.08])
RATIO_SCALE = np.array([0.08, 0.15, 0.30, 0.10, 0.15])
RISK_DIRECTION = np.array([-1.0, 1.0, -1.0, -1.0, -1.0]) / np.sqrt(5.0)

RISK_LEXICON_SIZE = 12
BASE_RISK_TOKEN_RATE = 0.04


@dataclass(frozen=True)
class SynthConfig:
    n_enterprises: int = 1000
    positive_rate: float = 0.15
    n_industries: int = 12
    n_regions: int = 6
    signal_structured: float = 1.0
    signal_text: float = 1.0
    signal_graph: float = 1.0
    vocab_size: int = 200
    tokens_per_doc: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.n_enterprises < 2:
            raise ConfigError(f"n_enterprises must be >= 2, got {self.n_enterprises}")
        if not 0.0 < self.positive_rate < 1.0:
            raise ConfigError(f"positive_rate must lie in (0, 1), got {self.positive_rate}")
        if self.n_industries < 2 or self.n_regions < 2:
            raise ConfigError("n_industries and n_regions must be >= 2")
        if min(self.signal_structured, self.signal_text, self.signal_graph) < 0:
            raise ConfigError("signal strengths must be >= 0")
        if self.vocab_size < 1 or self.tokens_per_doc < 1:
            raise ConfigError("vocab_size and tokens_per_doc must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def risk_lexicon() -> list[str]:
    return [f"risk{i:02d}" for i in range(RISK_LEXICON_SIZE)]


def generate(cfg: SynthConfig) -> Dataset:
    n = cfg.n_enterprises
    rng = np.random.default_rng([cfg.seed, 0x517])
    y = (rng.random(n) < cfg.positive_rate).astype(np.int64)

    z = rng.normal(size=(n, 5))
    z[y == 1] += cfg.signal_structured * RISK_DIRECTION
    ratios = RATIO_MEAN + RATIO_SCALE * z

    riskiness = rng.normal(size=cfg.n_industries)
    riskiness = (riskiness - riskiness.mean()) / riskiness.std()
    logits = np.where(y[:, None] == 1, 1.0, -1.0) * cfg.signal_graph * riskiness[None, :]
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    cum = np.cumsum(probs / probs.sum(axis=1, keepdims=True), axis=1)
    ind_idx = np.minimum((rng.random((n, 1)) > cum).sum(axis=1), cfg.n_industries - 1)
    reg_idx = rng.integers(cfg.n_regions, size=n)

    lexicon = np.array(risk_lexicon())
    neutral = np.array([f"w{i:03d}" for i in range(cfg.vocab_size)])
    q = np.where(y == 1, min(0.9, BASE_RISK_TOKEN_RATE * np.exp(cfg.signal_text)), BASE_RISK_TOKEN_RATE)
    t = cfg.tokens_per_doc
    is_risk = rng.random((n, t)) < q[:, None]
    risk_pick = rng.integers(lexicon.size, size=(n, t))
    neutral_pick = rng.integers(neutral.size, size=(n, t))
    docs = np.where(is_risk, lexicon[risk_pick], neutral[neutral_pick])

    order = rng.permutation(n)
    return Dataset(
        ids=[f"E{i:05d}" for i in range(n)],
        structured=ratios[order],
        industry=[f"IND{int(j):02d}" for j in ind_idx[order]],
        region=[f"REG{int(j):02d}" for j in reg_idx[order]],
        tokens=[list(map(str, docs[i])) for i in order],
        labels=y[order],
    )
