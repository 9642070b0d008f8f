"""Baseline/ablation grid: every variant over several seeds, with CSV/JSON export.

Each seed draws its own split and initialization over the same dataset;
featurizers are refit on that seed's training split. Every run is scored on
the validation split (the headline numbers) and on the held-out test split.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dataset import Dataset
from .errors import DataError, StorageError
from .metrics import EvalReport, evaluate_scores
from .model import ABLATION_ROWS, EXTERNAL_BASELINES, FULL_MODEL_LABEL, VARIANTS, get_variant
from .pipeline import prepare
from .train import split_dataset, train_model

log = logging.getLogger(__name__)

GRID_ORDER = tuple(VARIANTS)
RESULT_COLUMNS = ("config", "model", "fusion_strategy", "seed", "split",
                  "auc", "precision", "recall", "f1", "threshold", "note")
METRICS = ("auc", "precision", "recall", "f1")
SPLITS = ("val", "test")


@dataclass
class GridResult:
    seeds: list[int]
    variants: list[str]
    # reports[split][variant] holds one EvalReport per seed
    reports: dict[str, dict[str, list[EvalReport]]] = field(default_factory=dict)

    def metric(self, variant: str, name: str = "auc", split: str = "val") -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports[split][variant]])

    def mean(self, variant: str, name: str = "auc", split: str = "val") -> float:
        return float(self.metric(variant, name, split).mean())

    def summary(self) -> dict:
        return {
            split: {v: {m: {"mean": float(self.metric(v, m, split).mean()),
                            "std": float(self.metric(v, m, split).std())} for m in METRICS}
                    for v in self.variants}
            for split in self.reports
        }


def run_grid(
    ds: Dataset,
    cfg: RunConfig,
    seeds=(0, 1, 2, 3, 4),
    variants=GRID_ORDER,
) -> GridResult:
    if ds.labels is None:
        raise DataError("the grid needs labelled data")
    vs = [get_variant(v).name for v in variants]
    if ds.tokens is None:
        needs_text = [v for v in vs if "T" in VARIANTS[v].channels]
        if needs_text:
            raise DataError(f"variants {needs_text} need texts.jsonl")
    result = GridResult(list(seeds), vs, {s: {v: [] for v in vs} for s in SPLITS})
    for seed in result.seeds:
        run = cfg.with_seed(seed)
        sp = split_dataset(len(ds), ds.labels, run.split)
        prep = prepare(ds, sp, run.k, run.max_features, run.min_df, use_text=ds.tokens is not None)
        for v in vs:
            res = train_model(v, prep.features, prep.graph, prep.labels, sp, run.train)
            proba, _ = res.model.predict(prep.features, prep.graph)
            for split in SPLITS:
                idx = getattr(sp, split)
                rep = evaluate_scores(proba[idx], prep.labels[idx], run.threshold, v, seed, split)
                result.reports[split][v].append(rep)
            log.info("seed %d %s val auc %.4f (best epoch %d)", seed, v,
                     result.reports["val"][v][-1].auc, res.best_epoch)
    return result


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else "nan"


def result_rows(result: GridResult, threshold: float) -> list[list[str]]:
    """Per-seed rows, then mean/std rows, for each split; V3's aggregates are
    repeated under the full-model ablation label."""
    rows = []
    for split in result.reports:
        for v in result.variants:
            var = VARIANTS[v]
            for rep in result.reports[split][v]:
                rows.append([v, var.label, var.fusion_label, str(rep.seed), split,
                             *(_fmt(getattr(rep, m)) for m in METRICS), _fmt(threshold),
                             "no positive predictions" if rep.degenerate else ""])
            labels = [var.label]
            if v in ABLATION_ROWS and ABLATION_ROWS[v] != var.label:
                labels.append(ABLATION_ROWS[v])
            for label in labels:
                note = "alias of V3" if label == FULL_MODEL_LABEL else ""
                for agg, fn in (("mean", np.mean), ("std", np.std)):
                    rows.append([v, label, var.fusion_label, agg, split,
                                 *(_fmt(fn(result.metric(v, m, split))) for m in METRICS),
                                 _fmt(threshold), note])
        for key, label in EXTERNAL_BASELINES.items():
            rows.append([key, label, "--", "", split, "", "", "", "", "", "external: not implemented"])
    return rows


def write_grid(result: GridResult, cfg: RunConfig, out_dir) -> list[Path]:
    """results.csv, report.json and one roc_<config>.csv per variant
    (validation split of the first seed)."""
    d = Path(out_dir)
    stamp = cfg.stamp_line() + " seeds=" + ",".join(map(str, result.seeds))
    paths = []
    try:
        d.mkdir(parents=True, exist_ok=True)
        p = d / "results.csv"
        with open(p, "w", newline="") as fh:
            fh.write(f"# {stamp}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            w.writerows(result_rows(result, cfg.threshold))
        paths.append(p)
        for v in result.variants:
            p = d / f"roc_{v}.csv"
            with open(p, "w", newline="") as fh:
                fh.write(f"# {cfg.stamp_line()} config={v} seed_run={result.seeds[0]} split=val\n")
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("fpr", "tpr"))
                w.writerows((repr(f), repr(t)) for f, t in result.reports["val"][v][0].roc_points)
            paths.append(p)
        p = d / "report.json"
        report = {**cfg.stamp(), "seeds": result.seeds, "config": cfg.to_flat(),
                  "summary": result.summary(),
                  "runs": {split: {v: [r.to_dict(with_roc=False) for r in reps[v]] for v in result.variants}
                           for split, reps in result.reports.items()}}
        p.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
        paths.append(p)
    except OSError as exc:
        raise StorageError(f"cannot write grid results to {d}: {exc}") from exc
    return paths
