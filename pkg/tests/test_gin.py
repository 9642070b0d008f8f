import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskgin.errors import ShapeError
from riskgin.gin import (
    EPS_INIT,
    N_LAYERS,
    GinChannel,
    GinLayerParams,
    aggregation_gain,
    channel_encode,
    channel_from_nodes,
    gcn_layer_forward,
    gin_layer_forward,
    glorot,
    init_gin_channel,
)
from riskgin.graph import EnterpriseGraph
from riskgin.numcore import Tape


def identity_layer(t: Tape, d: int, eps: float) -> GinLayerParams:
    return GinLayerParams(t.const([[eps]]), t.const(np.eye(d)), t.const(np.zeros((1, d))),
                          t.const(np.eye(d)), t.const(np.zeros((1, d))))


def random_graph(rng, n, p=0.3) -> EnterpriseGraph:
    return EnterpriseGraph.from_edges(n, [e for e in itertools.combinations(range(n), 2) if rng.random() < p])


def channel_nodes(t: Tape, params: dict) -> GinChannel:
    return channel_from_nodes("structured", "S", {k: t.const(v) for k, v in params.items()})


def test_single_edge_example_is_exact():
    # h_u = 1, h_v = 3, eps = 0.1, identity MLP: v -> (1 + 0.1) * 3 + 1 = 4.3
    t = Tape()
    g = EnterpriseGraph.from_edges(2, [(0, 1)])
    out = gin_layer_forward(t, t.const([[1.0], [3.0]]), g, identity_layer(t, 1, 0.1))
    assert out.value[1, 0] == 4.3
    assert out.value[0, 0] == 1.0 + 3.0 + 0.1 * 1.0


def test_isolated_node_with_zero_eps_is_identity():
    t = Tape()
    g = EnterpriseGraph.from_edges(1, [])
    h = np.array([[0.5, 2.0]])
    out = gin_layer_forward(t, t.const(h), g, identity_layer(t, 2, 0.0))
    np.testing.assert_array_equal(out.value, h)


def test_shape_errors():
    t = Tape()
    g = EnterpriseGraph.from_edges(3, [(0, 1)])
    with pytest.raises(ShapeError):
        gin_layer_forward(t, t.const(np.ones((2, 1))), g, identity_layer(t, 1, 0.1))
    ch = channel_nodes(t, init_gin_channel("S", 5, 8, 8, seed=0))
    with pytest.raises(ShapeError):
        channel_encode(t, t.const(np.ones((3, 4))), g, ch)


def test_init_layout():
    p = init_gin_channel("T", 7, 16, 12, seed=3)
    assert len(p) == 5 * N_LAYERS
    assert p["T.l0.w1"].shape == (7, 16)
    assert p["T.l2.w2"].shape == (16, 12)
    assert all(p[f"T.l{k}.eps"][0, 0] == EPS_INIT for k in range(N_LAYERS))
    np.testing.assert_array_equal(p["T.l1.b1"], 0.0)
    # same seed and name -> same values regardless of other parameters
    np.testing.assert_array_equal(init_gin_channel("T", 7, 16, 12, seed=3)["T.l1.w2"], p["T.l1.w2"])


def test_glorot_range():
    w = glorot(np.random.default_rng(0), 30, 50)
    limit = np.sqrt(6.0 / 80)
    assert np.abs(w).max() <= limit
    assert np.abs(w).max() > 0.9 * limit


def test_aggregation_gain():
    g = EnterpriseGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])  # mean degree 2
    assert aggregation_gain(g) == 1.0 / np.sqrt(3.1)
    assert aggregation_gain(EnterpriseGraph.from_edges(3, [])) == 1.0 / np.sqrt(1.1)


def test_eval_is_deterministic_and_zero_maps_to_zero():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 10)
    params = init_gin_channel("S", 4, 8, 6, seed=1)
    x = rng.normal(size=(10, 4))
    a = channel_encode(Tape(), Tape().const(x), g, channel_nodes(Tape(), params)).value
    b = channel_encode(Tape(), Tape().const(x), g, channel_nodes(Tape(), params)).value
    np.testing.assert_array_equal(a, b)
    assert a.shape == (10, 6)
    z = channel_encode(Tape(), Tape().const(np.zeros((10, 4))), g, channel_nodes(Tape(), params)).value
    np.testing.assert_array_equal(z, 0.0)


def test_receptive_field_is_three_hops():
    # path 0-1-2-3-4: node 4 is 4 hops from node 0, node 3 is 3 hops
    g = EnterpriseGraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    params = init_gin_channel("S", 2, 8, 8, seed=2)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 2))
    base = channel_encode(Tape(), Tape().const(x), g, channel_nodes(Tape(), params)).value
    x2 = x.copy()
    x2[4] += 10.0
    moved = channel_encode(Tape(), Tape().const(x2), g, channel_nodes(Tape(), params)).value
    np.testing.assert_array_equal(moved[0], base[0])
    assert not np.array_equal(moved[1], base[1])


def test_eps_receives_gradient():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 8, 0.5)
    params = init_gin_channel("S", 3, 6, 6, seed=0)
    t = Tape()
    nodes = {k: t.leaf(v) for k, v in params.items()}
    out = channel_encode(t, t.const(rng.normal(size=(8, 3))), g, channel_from_nodes("structured", "S", nodes))
    t.backward(t.sum_all(t.mul(out, t.const(rng.normal(size=out.shape)))))
    for k in range(N_LAYERS):
        assert nodes[f"S.l{k}.eps"].grad[0, 0] != 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**31 - 1))
def test_permutation_equivariance_exact(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    params = init_gin_channel("S", 3, 8, 5, seed=seed % 1000)
    x = rng.normal(size=(n, 3))
    out = channel_encode(Tape(exact=True), Tape().const(x), g, channel_nodes(Tape(), params)).value
    perm = rng.permutation(n)
    out_p = channel_encode(Tape(exact=True), Tape().const(x[perm]), g.permuted(perm),
                           channel_nodes(Tape(), params)).value
    np.testing.assert_array_equal(out_p, out[perm])


class TestGcn:
    def test_single_node_identity(self):
        t = Tape()
        h = np.array([[-1.0, 2.0]])
        out = gcn_layer_forward(t, t.const(h), EnterpriseGraph.from_edges(1, []), t.const(np.eye(2)))
        np.testing.assert_array_equal(out.value, [[0.0, 2.0]])

    def test_constant_preserved_on_edge(self):
        t = Tape()
        out = gcn_layer_forward(t, t.const([[1.0], [1.0]]), EnterpriseGraph.from_edges(2, [(0, 1)]),
                                t.const([[1.0]]))
        np.testing.assert_allclose(out.value, [[1.0], [1.0]], rtol=0, atol=1e-15)

    def test_dense_oracle(self):
        rng = np.random.default_rng(4)
        g = random_graph(rng, 12, 0.3)
        h, w = rng.normal(size=(12, 4)), rng.normal(size=(4, 3))
        a_hat = g.adjacency.toarray() + np.eye(12)
        d = np.diag(1.0 / np.sqrt(a_hat.sum(axis=1)))
        expected = np.maximum(d @ a_hat @ d @ h @ w, 0.0)
        t = Tape()
        np.testing.assert_allclose(gcn_layer_forward(t, t.const(h), g, t.const(w)).value, expected,
                                   rtol=0, atol=1e-10)
