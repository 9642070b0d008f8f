import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskgin.errors import ConfigError, ShapeError
from riskgin.featurize import (
    ZScoreScaler,
    fit_category_encoder,
    onehot,
    tfidf_fit,
    tfidf_transform,
    zscore_apply,
    zscore_fit,
)


class TestZScore:
    def test_hand_example(self):
        s = zscore_fit(np.array([[1.0], [2.0], [3.0]]))
        assert s.mean[0] == 2.0
        assert abs(s.std[0] - math.sqrt(2.0 / 3.0)) < 1e-15
        np.testing.assert_allclose(zscore_apply(s, [[1.0], [2.0], [3.0]]).ravel(),
                                   [-1.2247, 0.0, 1.2247], atol=1e-4)

    def test_constant_column_maps_to_zero(self):
        x = np.array([[7.0, 1.0], [7.0, 2.0], [7.0, 4.0]])
        out = zscore_apply(zscore_fit(x), x)
        np.testing.assert_array_equal(out[:, 0], 0.0)

    def test_column_mismatch(self):
        s = zscore_fit(np.ones((3, 2)))
        with pytest.raises(ShapeError):
            zscore_apply(s, np.ones((3, 3)))

    def test_dict_round_trip(self):
        s = zscore_fit(np.random.default_rng(0).normal(size=(10, 5)))
        t = ZScoreScaler.from_dict(s.to_dict())
        np.testing.assert_array_equal(s.mean, t.mean)
        np.testing.assert_array_equal(s.std, t.std)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 40), st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_train_columns_standardized(self, n, d, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(loc=rng.normal(size=d) * 5, scale=rng.uniform(0.5, 3, size=d), size=(n, d))
        z = zscore_apply(zscore_fit(x), x)
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-10)
        # refitting on standardized data is (numerically) the identity map
        z2 = zscore_apply(zscore_fit(z), z)
        np.testing.assert_allclose(z2, z, atol=1e-9)


class TestTfidf:
    def test_defaults(self):
        import inspect

        sig = inspect.signature(tfidf_fit)
        assert sig.parameters["max_features"].default == 1000
        assert sig.parameters["min_df"].default == 5

    def test_min_df_boundary(self):
        corpus = [["a", "b"]] * 4 + [["a"]]
        vocab = tfidf_fit(corpus, min_df=5)
        assert vocab.terms == ("a",)

    def test_keeps_highest_df_with_lexicographic_ties(self):
        # 2000 eligible terms; df ranges over 5..9 so many ties
        rng = np.random.default_rng(0)
        terms = [f"t{i:04d}" for i in range(2000)]
        df = {t: int(rng.integers(5, 10)) for t in terms}
        corpus = [[] for _ in range(10)]
        for t, c in df.items():
            for j in range(c):
                corpus[j].append(t)
        vocab = tfidf_fit(corpus, max_features=1000, min_df=5)
        expected = sorted(terms, key=lambda t: (-df[t], t))[:1000]
        assert list(vocab.terms) == expected
        assert list(vocab.doc_freq) == [df[t] for t in expected]

    def test_empty_corpus(self):
        with pytest.raises(ConfigError):
            tfidf_fit([])

    def test_term_in_every_doc_has_unit_idf(self):
        corpus = [["x", "y"], ["x"], ["x", "z", "z"]]
        vocab = tfidf_fit(corpus, min_df=1)
        assert vocab.idf()[vocab.index["x"]] == 1.0
        m = tfidf_transform(vocab, corpus)
        assert m[0, vocab.index["z"]] == 0.0

    def test_out_of_vocabulary_and_empty_documents(self):
        vocab = tfidf_fit([["a", "b"], ["a"]], min_df=1)
        m = tfidf_transform(vocab, [["zzz"], [], ["a", "zzz"]])
        np.testing.assert_array_equal(m[0], 0.0)
        np.testing.assert_array_equal(m[1], 0.0)
        assert abs(np.linalg.norm(m[2]) - 1.0) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcdefg"), max_size=8), min_size=1, max_size=12))
    def test_rows_nonnegative_unit_or_zero(self, corpus):
        vocab = tfidf_fit(corpus, min_df=1)
        if len(vocab) == 0:
            return
        m = tfidf_transform(vocab, corpus)
        assert (m >= 0).all()
        norms = np.linalg.norm(m, axis=1)
        assert np.all((norms == 0) | (np.abs(norms - 1.0) < 1e-10))
        assert list(vocab.doc_freq) == sorted(vocab.doc_freq, reverse=True)


class TestCategories:
    def test_onehot_known_and_unseen(self):
        enc = fit_category_encoder(["A", "B", "C"], ["r1", "r2"])
        np.testing.assert_array_equal(enc.industry_onehot(["B"]), [[0, 1, 0]])
        np.testing.assert_array_equal(enc.industry_onehot(["Q"]), [[0, 0, 0]])
        prof = onehot(enc, ["C", "Q"], ["r1", "r9"])
        np.testing.assert_array_equal(prof, [[0, 0, 1, 1, 0], [0, 0, 0, 0, 0]])

    def test_argmax_recovers_category(self):
        inds = [f"I{i % 7}" for i in range(30)]
        enc = fit_category_encoder(inds, ["r"] * 30)
        oh = enc.industry_onehot(inds)
        assert (oh.sum(axis=1) == 1).all()
        assert [enc.industries[j] for j in oh.argmax(axis=1)] == inds

    def test_length_mismatch(self):
        enc = fit_category_encoder(["A"], ["r"])
        with pytest.raises(ShapeError):
            onehot(enc, ["A", "A"], ["r"])
