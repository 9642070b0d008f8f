import numpy as np
import pytest

from riskgin.errors import ConfigError
from riskgin.pipeline import Featurizer, prepare
from riskgin.synthdata import SynthConfig, generate
from riskgin.train import SplitSpec, split_dataset


@pytest.fixture(scope="module")
def ds():
    return generate(SynthConfig(n_enterprises=150, tokens_per_doc=15, seed=11))


def test_statistics_come_from_training_rows_only(ds):
    sp = split_dataset(len(ds), ds.labels, SplitSpec(seed=1))
    fz = Featurizer.fit(ds, sp.train, min_df=3)
    full = Featurizer.fit(ds, np.arange(len(ds)), min_df=3)
    train = ds.subset(sp.train)
    np.testing.assert_array_equal(fz.scaler.mean, train.structured.mean(axis=0))
    assert not np.array_equal(fz.scaler.mean, full.scaler.mean)
    assert fz.vocab.n_docs == len(sp.train) and full.vocab.n_docs == len(ds)
    assert fz.vocab.doc_freq != full.vocab.doc_freq
    # altering held-out rows leaves every fitted statistic unchanged
    held = np.concatenate([sp.val, sp.test])
    noisy = ds.subset(range(len(ds)))
    noisy.structured = ds.structured.copy()
    noisy.structured[held] += 100.0
    noisy.tokens = [["zzz"] * 9 if i in set(held) else t for i, t in enumerate(ds.tokens)]
    again = Featurizer.fit(noisy, sp.train, min_df=3)
    assert again.to_dict() == fz.to_dict()


def test_prepare_outputs(ds):
    sp = split_dataset(len(ds), ds.labels, SplitSpec(seed=2))
    prep = prepare(ds, sp, min_df=3)
    assert set(prep.features) == {"S", "T", "G"}
    assert prep.graph.node_count == len(ds)
    assert prep.graph.degrees().min() >= 5
    assert prep.features["G"].shape[1] == len(prep.featurizer.encoder.industries)
    np.testing.assert_allclose(prep.features["S"][sp.train].mean(axis=0), 0.0, atol=1e-12)
    no_text = prepare(ds, sp, min_df=3, use_text=False)
    assert "T" not in no_text.features


def test_featurizer_round_trip(ds):
    sp = split_dataset(len(ds), ds.labels, SplitSpec(seed=3))
    fz = Featurizer.fit(ds, sp.train, min_df=3)
    back = Featurizer.from_dict(fz.to_dict())
    for c, x in fz.transform(ds).items():
        np.testing.assert_array_equal(back.transform(ds)[c], x)
    assert back.build_graph(ds).edge_set == fz.build_graph(ds).edge_set


def test_vocabulary_must_not_be_empty(ds):
    with pytest.raises(ConfigError):
        Featurizer.fit(ds, np.arange(10), min_df=50)
    unlabeled = ds.subset(range(len(ds)))
    unlabeled.labels = None
    with pytest.raises(ConfigError):
        prepare(unlabeled, split_dataset(len(ds)))
