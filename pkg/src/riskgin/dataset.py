"""In-memory dataset and the on-disk formats.

Directory layout::

    enterprises.csv   id,roa,debt_to_asset,asset_turnover,cash_flow_ratio,net_asset_growth,industry,region
    texts.jsonl       {"id": ..., "tokens": [...]}  one object per line, pre-tokenized
    labels.csv        id,label   (1 = high risk, 0 = low risk)
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, StorageError
from .featurize import STRUCTURED_FIELDS

ENTERPRISES = "enterprises.csv"
TEXTS = "texts.jsonl"
LABELS = "labels.csv"
ENTERPRISE_HEADER = ("id",) + STRUCTURED_FIELDS + ("industry", "region")


@dataclass
class Dataset:
    ids: list[str]
    structured: np.ndarray  # (n, 5) raw ratios, column order STRUCTURED_FIELDS
    industry: list[str]
    region: list[str]
    tokens: list[list[str]] | None = None
    labels: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def __post_init__(self):
        n = len(self.ids)
        if len(set(self.ids)) != n:
            raise DataError("enterprise ids must be unique")
        if self.structured.shape != (n, len(STRUCTURED_FIELDS)):
            raise DataError(f"structured block has shape {self.structured.shape}, expected ({n}, 5)")
        if len(self.industry) != n or len(self.region) != n:
            raise DataError("industry/region columns do not match the number of enterprises")
        if self.tokens is not None and len(self.tokens) != n:
            raise DataError(f"{len(self.tokens)} documents for {n} enterprises")
        if self.labels is not None:
            if self.labels.shape != (n,) or not np.isin(self.labels, (0, 1)).all():
                raise DataError("labels must be a 0/1 vector with one entry per enterprise")

    def subset(self, index) -> "Dataset":
        idx = np.asarray(index, dtype=np.intp)
        return Dataset(
            [self.ids[i] for i in idx],
            self.structured[idx],
            [self.industry[i] for i in idx],
            [self.region[i] for i in idx],
            None if self.tokens is None else [self.tokens[i] for i in idx],
            None if self.labels is None else self.labels[idx],
        )


def write_dataset(ds: Dataset, directory) -> list[Path]:
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        paths = [d / ENTERPRISES]
        with open(d / ENTERPRISES, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ENTERPRISE_HEADER)
            for i, eid in enumerate(ds.ids):
                w.writerow([eid, *(repr(float(x)) for x in ds.structured[i]), ds.industry[i], ds.region[i]])
        if ds.tokens is not None:
            paths.append(d / TEXTS)
            with open(d / TEXTS, "w") as fh:
                for eid, toks in zip(ds.ids, ds.tokens):
                    fh.write(json.dumps({"id": eid, "tokens": list(toks)}, ensure_ascii=False) + "\n")
        if ds.labels is not None:
            paths.append(d / LABELS)
            with open(d / LABELS, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["id", "label"])
                w.writerows(zip(ds.ids, (int(v) for v in ds.labels)))
    except OSError as exc:
        raise StorageError(f"cannot write dataset to {d}: {exc}") from exc
    return paths


def _read_csv(path: Path, header: tuple[str, ...]) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != header:
        got = rows[0] if rows else "empty file"
        raise DataError(f"{path.name}: header must be {','.join(header)}, got {got}")
    return rows[1:]


def read_dataset(directory, need_text: bool = False, need_labels: bool = True) -> Dataset:
    d = Path(directory)
    if not (d / ENTERPRISES).exists():
        raise DataError(f"missing {d / ENTERPRISES}")
    ids, ratios, industry, region = [], [], [], []
    for line_no, row in enumerate(_read_csv(d / ENTERPRISES, ENTERPRISE_HEADER), start=2):
        if len(row) != len(ENTERPRISE_HEADER):
            raise DataError(f"{ENTERPRISES} row {line_no}: expected {len(ENTERPRISE_HEADER)} fields, got {len(row)}")
        vals = []
        for col, text in zip(STRUCTURED_FIELDS, row[1:6]):
            try:
                v = float(text)
            except ValueError:
                raise DataError(f"{ENTERPRISES} row {line_no}, column {col}: not a number: {text!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{ENTERPRISES} row {line_no}, column {col}: non-finite value")
            vals.append(v)
        ids.append(row[0])
        ratios.append(vals)
        industry.append(row[6])
        region.append(row[7])
    if len(set(ids)) != len(ids):
        raise DataError(f"{ENTERPRISES}: duplicate enterprise ids")
    pos = {eid: i for i, eid in enumerate(ids)}

    tokens = None
    if (d / TEXTS).exists():
        tokens = [None] * len(ids)
        with open(d / TEXTS) as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    eid, toks = obj["id"], obj["tokens"]
                except (json.JSONDecodeError, KeyError, TypeError):
                    raise DataError(f"{TEXTS} line {line_no}: expected an object with id and tokens") from None
                if eid not in pos:
                    raise DataError(f"{TEXTS} line {line_no}: unknown enterprise id {eid!r}")
                if not isinstance(toks, list) or not all(isinstance(t, str) for t in toks):
                    raise DataError(f"{TEXTS} line {line_no}, column tokens: must be a list of strings")
                tokens[pos[eid]] = toks
        missing = [ids[i] for i, t in enumerate(tokens) if t is None]
        if missing:
            raise DataError(f"{TEXTS}: no document for enterprise {missing[0]!r}")
    elif need_text:
        raise DataError(f"missing {d / TEXTS}, required by a text-using variant")

    labels = None
    if (d / LABELS).exists():
        labels = np.full(len(ids), -1, dtype=np.int64)
        for line_no, row in enumerate(_read_csv(d / LABELS, ("id", "label")), start=2):
            if len(row) != 2 or row[0] not in pos:
                raise DataError(f"{LABELS} row {line_no}, column id: unknown or malformed entry {row!r}")
            if row[1] not in ("0", "1"):
                raise DataError(f"{LABELS} row {line_no}, column label: must be 0 or 1, got {row[1]!r}")
            labels[pos[row[0]]] = int(row[1])
        if (labels < 0).any():
            raise DataError(f"{LABELS}: no label for enterprise {ids[int(np.argmax(labels < 0))]!r}")
    elif need_labels:
        raise DataError(f"missing {d / LABELS}")

    return Dataset(ids, np.array(ratios, dtype=np.float64).reshape(-1, 5), industry, region, tokens, labels)
