import json

import numpy as np
import pytest

from riskgin.config import SCHEMA_VERSION, RunConfig, load_config
from riskgin.errors import ConfigError, DataError, IncompatibleError, StorageError
from riskgin.persist import ModelBundle, load_model, save_model
from riskgin.pipeline import prepare
from riskgin.synthdata import SynthConfig, generate
from riskgin.train import TrainConfig, split_dataset, train_model


class TestConfig:
    def test_defaults_and_seed_propagation(self):
        cfg = RunConfig.from_flat({"learning_rate": 0.01, "n_enterprises": 50}, seed=7)
        assert cfg.train.learning_rate == 0.01 and cfg.synth.n_enterprises == 50
        assert cfg.synth.seed == cfg.train.seed == cfg.split.seed == cfg.seed == 7
        assert cfg.k == 5 and cfg.threshold == 0.5 and cfg.flag_threshold == 0.8

    def test_flat_round_trip_and_hash(self):
        cfg = RunConfig.from_flat({"dropout": 0.1, "val_fraction": 0.15, "train_fraction": 0.75}, seed=3)
        again = RunConfig.from_flat(cfg.to_flat())
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()
        assert cfg.with_seed(4).config_hash() != cfg.config_hash()
        assert len(cfg.config_hash()) == 16
        assert cfg.stamp() == {"schema_version": SCHEMA_VERSION, "seed": 3, "config_hash": cfg.config_hash()}
        assert cfg.stamp_line().startswith(f"schema_version={SCHEMA_VERSION} seed=3 config_hash=")

    @pytest.mark.parametrize("flat", [{"nope": 1}, {"k": 0}, {"learning_rate": [1]}, {"seed": -1},
                                      {"threshold": 2.0}, {"dropout": 1.5}])
    def test_invalid(self, flat):
        with pytest.raises(ConfigError):
            RunConfig.from_flat(flat)

    def test_load_config(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"max_epochs": 7, "patience": 3}))
        cfg = load_config(p, seed=2, variant="V1")
        assert cfg.train.max_epochs == 7 and cfg.variant == "V1" and cfg.seed == 2
        p.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(p)
        p.write_text("{")
        with pytest.raises(ConfigError):
            load_config(p)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")


@pytest.fixture(scope="module")
def trained():
    ds = generate(SynthConfig(n_enterprises=80, tokens_per_doc=10, seed=1))
    cfg = RunConfig.from_flat({"max_epochs": 2, "patience": 2, "min_df": 2}, seed=1)
    sp = split_dataset(len(ds), ds.labels, cfg.split)
    prep = prepare(ds, sp, cfg.k, cfg.max_features, cfg.min_df)
    res = train_model("V3", prep.features, prep.graph, prep.labels, sp, cfg.train)
    ids = {name: [ds.ids[i] for i in getattr(sp, name)] for name in ("train", "val", "test")}
    return ModelBundle(res.model, prep.featurizer, ids, cfg, res.best_epoch), ds, sp


def test_round_trip_reproduces_probabilities(trained, tmp_path):
    bundle, ds, sp = trained
    path = save_model(bundle, tmp_path / "m" / "model.json")
    back = load_model(path)
    for k, v in bundle.model.params.items():
        np.testing.assert_array_equal(back.model.params[k], v)
    assert back.config == bundle.config and back.split_ids == bundle.split_ids
    feats = back.featurizer.transform(ds)
    np.testing.assert_array_equal(feats["T"], bundle.featurizer.transform(ds)["T"])
    p0, _ = bundle.model.predict(bundle.featurizer.transform(ds), bundle.featurizer.build_graph(ds))
    p1, _ = back.model.predict(feats, back.featurizer.build_graph(ds))
    np.testing.assert_array_equal(p1[sp.val], p0[sp.val])


def test_incompatible_and_malformed(trained, tmp_path):
    bundle, _, _ = trained
    d = bundle.to_dict()
    with pytest.raises(IncompatibleError):
        ModelBundle.from_dict({**d, "schema_version": SCHEMA_VERSION + 1})
    with pytest.raises(IncompatibleError):
        ModelBundle.from_dict({**d, "kind": "riskgin-dataset"})
    broken = {**d, "params": {k: v for k, v in d["params"].items() if k != "clf.b"}}
    with pytest.raises(Exception) as exc:
        ModelBundle.from_dict(broken)
    assert exc.value.category in ("shape", "data")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(DataError):
        load_model(tmp_path / "bad.json")
    with pytest.raises(StorageError):
        load_model(tmp_path / "missing.json")
