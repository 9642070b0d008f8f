"""Command line: gen-data, train, evaluate, ablate, predict.

Failures exit with status 1 and print a single line ``error: <category>: <message>``
to stderr, where category is one of config, data, shape, numeric, metric,
incompatible, io.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, RunConfig, load_config
from .dataset import Dataset, read_dataset, write_dataset
from .errors import ConfigError, DataError, IncompatibleError, RiskGinError, StorageError
from .experiments import GRID_ORDER, run_grid, write_grid
from .graph import EnterpriseGraph, build_knn_graph
from .metrics import evaluate_scores
from .model import get_variant
from .persist import ModelBundle, load_model, save_model
from .pipeline import prepare
from .synthdata import generate
from .train import Split, split_dataset, train_model

MANIFEST = "manifest.json"
DATASET_KIND = "riskgin-dataset"


def _write_json(path: Path, obj: dict) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def _check_manifest(data_dir: Path) -> None:
    p = data_dir / MANIFEST
    if not p.exists():
        return
    try:
        meta = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable {p}: {exc}") from None
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise IncompatibleError(
            f"dataset schema_version {meta.get('schema_version')} != supported {SCHEMA_VERSION}"
        )


def _load_data(data_dir, need_text: bool, need_labels: bool = True) -> Dataset:
    d = Path(data_dir)
    if not d.is_dir():
        raise DataError(f"dataset directory {d} does not exist")
    _check_manifest(d)
    return read_dataset(d, need_text=need_text, need_labels=need_labels)


def _config(args) -> RunConfig:
    overrides = {}
    if getattr(args, "variant", None):
        overrides["variant"] = args.variant
    return load_config(args.config, seed=args.seed, **overrides)


def _positions(ds: Dataset, ids: list[str], what: str) -> np.ndarray:
    pos = {eid: i for i, eid in enumerate(ds.ids)}
    missing = [e for e in ids if e not in pos]
    if missing:
        raise DataError(f"{what}: enterprise {missing[0]!r} is not in the dataset")
    return np.array([pos[e] for e in ids], dtype=np.intp)


def cmd_gen_data(args) -> None:
    cfg = _config(args)
    out = Path(args.out)
    ds = generate(cfg.synth)
    write_dataset(ds, out)
    _write_json(out / MANIFEST, {"kind": DATASET_KIND, **cfg.stamp(), "n_enterprises": len(ds),
                                 "n_positive": int(ds.labels.sum()), "synth": cfg.synth.to_dict()})
    print(f"wrote {len(ds)} enterprises ({int(ds.labels.sum())} high risk) to {out}")


def cmd_train(args) -> None:
    cfg = _config(args)
    variant = get_variant(cfg.variant)
    ds = _load_data(args.data, need_text="T" in variant.channels)
    sp = split_dataset(len(ds), ds.labels, cfg.split)
    prep = prepare(ds, sp, cfg.k, cfg.max_features, cfg.min_df, use_text="T" in variant.channels)
    res = train_model(variant, prep.features, prep.graph, prep.labels, sp, cfg.train)
    split_ids = {name: [ds.ids[i] for i in getattr(sp, name)] for name in Split._fields}
    bundle = ModelBundle(res.model, prep.featurizer, split_ids, cfg, res.best_epoch)
    out = Path(args.out)
    save_model(bundle, out / "model.json")
    try:
        res.history.write_csv(out / "history.csv", cfg.stamp_line() + f" variant={variant.name}")
    except OSError as exc:
        raise StorageError(f"cannot write {out / 'history.csv'}: {exc}") from exc
    proba, _ = res.model.predict(prep.features, prep.graph)
    rep = evaluate_scores(proba[sp.val], prep.labels[sp.val], cfg.threshold)
    print(f"{variant.name}: best epoch {res.best_epoch} of {len(res.history.epoch)}, "
          f"val auc {rep.auc:.4f}; wrote {out / 'model.json'}")


def _score(bundle: ModelBundle, ds: Dataset) -> tuple[np.ndarray, np.ndarray | None, EnterpriseGraph]:
    fz = bundle.featurizer
    feats = fz.transform(ds)
    n = len(ds)
    if n < 2:
        graph = EnterpriseGraph.from_edges(n, [])
    else:
        graph = build_knn_graph(fz.profiles(ds), min(fz.k, n - 1))
    proba, alpha = bundle.model.predict(feats, graph)
    return proba, alpha, graph


def cmd_evaluate(args) -> None:
    bundle = load_model(args.model)
    channels = bundle.model.variant.channels
    ds = _load_data(args.data, need_text="T" in channels)
    if args.split not in bundle.split_ids:
        raise ConfigError(f"unknown split {args.split!r}")
    idx = _positions(ds, bundle.split_ids[args.split], f"{args.split} split")
    proba, _, _ = _score(bundle, ds)
    cfg = bundle.config
    rep = evaluate_scores(proba[idx], ds.labels[idx], cfg.threshold,
                          bundle.model.variant.name, cfg.seed, args.split)
    out = Path(args.out)
    _write_json(out / "report.json", {**cfg.stamp(), **rep.to_dict(with_roc=False)})
    try:
        with open(out / "roc.csv", "w", newline="") as fh:
            fh.write(f"# {cfg.stamp_line()} config={rep.config} split={args.split}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("fpr", "tpr"))
            w.writerows((repr(f), repr(t)) for f, t in rep.roc_points)
    except OSError as exc:
        raise StorageError(f"cannot write {out / 'roc.csv'}: {exc}") from exc
    print(f"{rep.config} {args.split}: auc {rep.auc:.4f} precision {rep.precision:.4f} "
          f"recall {rep.recall:.4f} f1 {rep.f1:.4f}")


def cmd_ablate(args) -> None:
    cfg = _config(args)
    variants = args.variants.split(",") if args.variants else GRID_ORDER
    needs_text = any("T" in get_variant(v).channels for v in variants)
    ds = _load_data(args.data, need_text=needs_text)
    seeds = _parse_seeds(args.seeds, cfg.seed)
    result = run_grid(ds, cfg, seeds, variants)
    paths = write_grid(result, cfg, args.out)
    for v in result.variants:
        print(f"{v:10s} val auc {result.mean(v):.4f} +- {result.metric(v).std():.4f}  "
              f"test auc {result.mean(v, split='test'):.4f}")
    print(f"wrote {len(paths)} files to {args.out}")


def cmd_predict(args) -> None:
    bundle = load_model(args.model)
    model = bundle.model
    channels = model.variant.channels
    ds = _load_data(args.data, need_text="T" in channels, need_labels=False)
    proba, alpha, _ = _score(bundle, ds)
    flag_at = bundle.config.flag_threshold if args.flag_threshold is None else args.flag_threshold
    out = Path(args.out)
    path = out / "predictions.csv" if out.suffix != ".csv" else out
    header = ["id", "probability", "flag"]
    if alpha is not None:
        header += [f"alpha_{c}" for c in channels]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(f"# {bundle.config.stamp_line()} variant={model.variant.name} flag_threshold={flag_at!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, eid in enumerate(ds.ids):
                row = [eid, repr(float(proba[i])), int(proba[i] > flag_at)]
                if alpha is not None:
                    row += [repr(float(a)) for a in alpha[i]]
                w.writerow(row)
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
    n_flag = int((proba > flag_at).sum())
    print(f"scored {len(ds)} enterprises, {n_flag} flagged above {flag_at}; wrote {path}")


def _parse_seeds(text: str | None, default: int) -> list[int]:
    if not text:
        return [default]
    try:
        if "," not in text and ":" not in text:
            return list(range(default, default + int(text)))
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi)))
        return [int(s) for s in text.split(",")]
    except ValueError:
        raise ConfigError(f"--seeds must be a count, a list like 0,1,2 or a range lo:hi; got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskgin", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, out_help="output directory"):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", required=True, help=out_help)
        if data:
            p.add_argument("--data", required=True, help="dataset directory")
        return p

    p = common(sub.add_parser("gen-data", help="write a synthetic dataset"), data=False)
    p.set_defaults(func=cmd_gen_data)

    p = common(sub.add_parser("train", help="train one variant"))
    p.add_argument("--variant", help=f"one of {', '.join(GRID_ORDER)} (default V3)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics and ROC for a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="val", choices=Split._fields)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = common(sub.add_parser("ablate", help="baseline and ablation grid over seeds"))
    p.add_argument("--seeds", default="5", help="count (from --seed), list 0,1,2 or range lo:hi")
    p.add_argument("--variants", help="comma-separated subset (default: all)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("predict", help="score enterprises with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="directory with enterprises.csv (and texts.jsonl)")
    p.add_argument("--out", required=True, help="output directory or .csv path")
    p.add_argument("--flag-threshold", type=float, help="flag rows with probability above this")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except RiskGinError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
