"""Ranking and threshold metrics for binary risk scores."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from .errors import ShapeError, UndefinedMetricError


def _prepare(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ShapeError(f"{s.size} scores vs {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise UndefinedMetricError("labels must be 0 or 1")
    y = y.astype(bool)
    if y.all() or not y.any():
        raise UndefinedMetricError("metric needs at least one positive and one negative label")
    return s, y


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(pos > neg) with ties counted 1/2.

    Uses tie-averaged ranks; the rank-sum numerator is a multiple of 1/2 and
    therefore exact, so the result equals the pairwise count bit for bit.
    """
    s, y = _prepare(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


class PRF1(NamedTuple):
    precision: float
    recall: float
    f1: float
    degenerate: bool  # no positive predictions


def prf1(scores, labels, threshold: float = 0.5) -> PRF1:
    """Precision/recall/F1 of the positive class, predicting 1 where score >= threshold."""
    s, y = _prepare(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    degenerate = tp + fp == 0
    precision = 0.0 if degenerate else tp / (tp + fp)
    recall = tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return PRF1(precision, recall, f1, degenerate)


def roc_points(scores, labels) -> list[tuple[float, float]]:
    """(fpr, tpr) after each distinct threshold, scores swept high to low."""
    s, y = _prepare(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_run = np.r_[np.diff(s) != 0, True]
    tp = np.cumsum(y)[last_of_run]
    fp = np.cumsum(~y)[last_of_run]
    n_pos, n_neg = tp[-1], fp[-1]
    pts = [(0.0, 0.0)]
    pts.extend((float(f / n_neg), float(t / n_pos)) for f, t in zip(fp, tp))
    return pts


def trapezoid_area(points) -> float:
    xs, ys = np.asarray(points, dtype=float).T
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))


@dataclass
class EvalReport:
    auc: float
    precision: float
    recall: float
    f1: float
    threshold: float
    n_pos: int
    n_neg: int
    config: str = ""
    seed: int | None = None
    split: str = "val"
    degenerate: bool = False
    roc_points: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_dict(self, with_roc: bool = True) -> dict:
        d = asdict(self)
        d["roc_points"] = [list(p) for p in self.roc_points] if with_roc else None
        return d


def evaluate_scores(scores, labels, threshold: float = 0.5, config: str = "",
                    seed: int | None = None, split: str = "val") -> EvalReport:
    s, y = _prepare(scores, labels)
    p = prf1(s, y.astype(int), threshold)
    return EvalReport(
        auc=roc_auc(s, y.astype(int)),
        precision=p.precision,
        recall=p.recall,
        f1=p.f1,
        threshold=threshold,
        n_pos=int(y.sum()),
        n_neg=int((~y).sum()),
        config=config,
        seed=seed,
        split=split,
        degenerate=p.degenerate,
        roc_points=roc_points(s, y.astype(int)),
    )
