import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskgin.errors import ConfigError, NumericError
from riskgin.graph import EnterpriseGraph
from riskgin.metrics import roc_auc
from riskgin.train import (
    History,
    Split,
    SplitSpec,
    TrainConfig,
    TrainState,
    adam_step,
    split_dataset,
    split_sizes,
    train_logreg,
    train_model,
)


class TestSplit:
    def test_sizes(self):
        assert split_sizes(100, SplitSpec()) == (80, 10, 10)
        assert split_sizes(7731, SplitSpec()) == (6184, 773, 774)

    def test_bad_specs(self):
        with pytest.raises(ConfigError):
            SplitSpec(0.8, 0.1, 0.2)
        with pytest.raises(ConfigError):
            SplitSpec(1.0, 0.0, 0.0)
        with pytest.raises(ConfigError):
            split_dataset(9)

    def test_deterministic_and_seed_sensitive(self):
        y = (np.arange(200) % 7 == 0).astype(int)
        a = split_dataset(200, y, SplitSpec(seed=3))
        b = split_dataset(200, y, SplitSpec(seed=3))
        c = split_dataset(200, y, SplitSpec(seed=4))
        for x, z in zip(a, b):
            np.testing.assert_array_equal(x, z)
        assert not np.array_equal(a.val, c.val)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(10, 400), st.floats(0.05, 0.5), st.integers(0, 2**31 - 1), st.booleans())
    def test_partition_and_stratification(self, n, rate, seed, stratified):
        rng = np.random.default_rng(seed)
        y = (rng.random(n) < rate).astype(int)
        sp = split_dataset(n, y, SplitSpec(stratified=stratified, seed=seed))
        allidx = np.concatenate(sp)
        assert sorted(allidx.tolist()) == list(range(n))
        assert tuple(len(p) for p in sp) == split_sizes(n, SplitSpec())
        if stratified:
            g = y.mean()
            for part in sp:
                assert abs(y[part].sum() - g * len(part)) <= 1.0 + 1e-9


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = {"w": np.array([[1.0, -2.0]])}
        st_ = TrainState.fresh(p)
        adam_step(p, {"w": np.zeros((1, 2))}, st_)
        np.testing.assert_array_equal(p["w"], [[1.0, -2.0]])

    def test_first_step_moves_by_lr(self):
        p = {"w": np.array([[1.0, -2.0, 0.5]])}
        adam_step(p, {"w": np.array([[3.0, -0.01, 1e3]])}, TrainState.fresh(p), lr=1e-3)
        np.testing.assert_allclose(p["w"], [[0.999, -1.999, 0.499]], rtol=0, atol=1e-8)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(0)
        gs = rng.normal(size=10)
        p = {"w": np.array([[0.3]])}
        state = TrainState.fresh(p)
        x, m, v = 0.3, 0.0, 0.0
        for t, g in enumerate(gs, start=1):
            adam_step(p, {"w": np.array([[g]])}, state, lr=0.01)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            x -= 0.01 * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert abs(p["w"][0, 0] - x) < 1e-12
        assert state.t == 10

    def test_non_finite_gradient(self):
        p = {"w": np.ones((1, 1))}
        with pytest.raises(NumericError):
            adam_step(p, {"w": np.array([[np.inf]])}, TrainState.fresh(p))
        assert p["w"][0, 0] == 1.0


def test_config_defaults_and_validation():
    c = TrainConfig()
    assert (c.learning_rate, c.batch_size, c.max_epochs, c.l2_coeff, c.dropout, c.patience) == \
        (0.001, 32, 100, 0.01, 0.2, 10)
    for bad in ({"learning_rate": 0}, {"batch_size": 0}, {"dropout": 1.0}, {"l2_coeff": -1},
                {"max_epochs": 5, "patience": 6}):
        with pytest.raises(ConfigError):
            TrainConfig(**bad)


def test_history_csv(tmp_path):
    h = History()
    h.append(1, 0.5, 0.6, 0.7)
    h.write_csv(tmp_path / "h.csv", "stamp")
    assert (tmp_path / "h.csv").read_text() == "# stamp\nepoch,train_loss,val_loss,val_auc\n1,0.5,0.6,0.7\n"


def _separable(n=120, seed=0):
    rng = np.random.default_rng(seed)
    y = (np.arange(n) % 3 == 0).astype(float)
    x = rng.normal(size=(n, 5))
    x[:, 0] += np.where(y == 1, 3.0, -3.0)
    return x, y


def test_logreg_learns_separable_signal():
    x, y = _separable()
    sp = split_dataset(len(y), y, SplitSpec(seed=1))
    res = train_logreg(x, y, sp, TrainConfig(learning_rate=0.05, max_epochs=60))
    p, _ = res.model.predict({"S": x}, EnterpriseGraph.from_edges(len(y), []))
    assert roc_auc(p[sp.test], y[sp.test]) == 1.0


def test_early_stopping_invariants_and_determinism():
    x, y = _separable(seed=2)
    rng = np.random.default_rng(3)
    y = np.where(rng.random(len(y)) < 0.3, 1 - y, y)  # label noise so validation loss turns
    sp = split_dataset(len(y), y, SplitSpec(seed=2))
    g = EnterpriseGraph.from_edges(len(y), [(i, i + 1) for i in range(len(y) - 1)])
    cfg = TrainConfig(learning_rate=0.05, max_epochs=40, patience=4, seed=5)
    a = train_model("single-S", {"S": x}, g, y, sp, cfg, hidden=8, embed=8)
    b = train_model("single-S", {"S": x}, g, y, sp, cfg, hidden=8, embed=8)
    h = a.history
    assert h.epoch == list(range(1, len(h.epoch) + 1))
    assert a.best_epoch == 1 + int(np.argmin(h.val_loss))
    assert min(h.val_loss) == a.state.best_val_loss
    if len(h.epoch) < cfg.max_epochs:
        assert len(h.epoch) == a.best_epoch + cfg.patience
    # restored parameters reproduce the best epoch's validation loss
    p, _ = a.model.predict({"S": x}, g, exact=False)
    yv = y[sp.val]
    val_loss = -np.mean(yv * np.log(p[sp.val]) + (1 - yv) * np.log(1 - p[sp.val]))
    assert val_loss == a.state.best_val_loss
    assert h.val_loss == b.history.val_loss
    for k in a.model.params:
        np.testing.assert_array_equal(a.model.params[k], b.model.params[k])


def test_null_labels_stay_near_chance():
    rng = np.random.default_rng(0)
    n = 400
    x = rng.normal(size=(n, 5))
    y = (rng.random(n) < 0.3).astype(float)
    sp = split_dataset(n, y, SplitSpec(0.5, 0.25, 0.25, seed=0))
    res = train_logreg(x, y, sp, TrainConfig(max_epochs=30))
    p, _ = res.model.predict({"S": x}, EnterpriseGraph.from_edges(n, []))
    assert 0.35 <= roc_auc(p[sp.test], y[sp.test]) <= 0.65


def test_manual_split_type():
    sp = Split(np.array([0, 1]), np.array([2]), np.array([3]))
    assert sp.train.tolist() == [0, 1]
