"""GIN message passing per channel, plus the GCN baseline layer."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ShapeError
from .graph import EnterpriseGraph
from .numcore import Node, Tape

N_LAYERS = 3
EPS_INIT = 0.1
CHANNEL_KINDS = ("structured", "text", "graph")


def param_rng(seed: int, name: str) -> np.random.Generator:
    """Generator keyed by (seed, parameter name), so a parameter's initial value
    does not depend on which other parameters the model happens to have."""
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float = 1.0) -> np.ndarray:
    limit = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def aggregation_gain(graph: EnterpriseGraph) -> float:
    """Init gain that offsets the (1 + eps + degree)-fold growth of a sum
    aggregation, so activations keep their scale through stacked layers."""
    mean_degree = 2.0 * len(graph.edges) / max(graph.node_count, 1)
    return 1.0 / np.sqrt(1.0 + EPS_INIT + mean_degree)


@dataclass
class GinLayerParams:
    """One GIN layer: learnable epsilon and a 2-layer MLP. Fields hold arrays
    when stored and tape nodes during a forward pass."""

    eps: Any
    w1: Any
    b1: Any
    w2: Any
    b2: Any

    FIELDS = ("eps", "w1", "b1", "w2", "b2")


@dataclass
class GinChannel:
    kind: str
    layers: list[GinLayerParams]


def init_gin_channel(prefix: str, d_in: int, hidden: int, embed: int, seed: int,
                     agg_gain: float = 1.0) -> dict[str, np.ndarray]:
    """Named initial parameters for a 3-layer channel, e.g. ``S.l0.w1``.

    ``agg_gain`` scales the first MLP matrix of every layer (see
    :func:`aggregation_gain`).
    """
    params = {}
    widths = [d_in] + [embed] * N_LAYERS
    for k in range(N_LAYERS):
        p = f"{prefix}.l{k}."
        params[p + "eps"] = np.full((1, 1), EPS_INIT)
        params[p + "w1"] = glorot(param_rng(seed, p + "w1"), widths[k], hidden, agg_gain)
        params[p + "b1"] = np.zeros((1, hidden))
        params[p + "w2"] = glorot(param_rng(seed, p + "w2"), hidden, widths[k + 1])
        params[p + "b2"] = np.zeros((1, widths[k + 1]))
    return params


def channel_from_nodes(kind: str, prefix: str, nodes: dict[str, Node]) -> GinChannel:
    layers = [
        GinLayerParams(*(nodes[f"{prefix}.l{k}.{f}"] for f in GinLayerParams.FIELDS))
        for k in range(N_LAYERS)
    ]
    return GinChannel(kind, layers)


def gin_layer_forward(
    tape: Tape,
    h: Node,
    graph: EnterpriseGraph,
    p: GinLayerParams,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Node:
    """MLP((1 + eps) * h_v + sum of neighbor rows), dropout on the output."""
    if h.shape[0] != graph.node_count:
        raise ShapeError(f"gin layer: {h.shape[0]} feature rows for {graph.node_count} nodes")
    # h + sum + eps*h rather than (1 + eps)*h + sum: forming 1 + eps first
    # rounds away the low bits of a small eps
    pre = tape.add(tape.add(h, tape.neighbor_sum(h, graph.adjacency)), tape.mul(h, p.eps))
    z = tape.activate(tape.affine(pre, p.w1, p.b1), "relu")
    out = tape.affine(z, p.w2, p.b2)
    return tape.dropout(out, dropout, training, rng)


def channel_encode(
    tape: Tape,
    features: Node,
    graph: EnterpriseGraph,
    channel: GinChannel,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Node:
    w_in = channel.layers[0].w1.shape[0]
    if features.shape[1] != w_in:
        raise ShapeError(f"{channel.kind} channel expects width {w_in}, got {features.shape[1]}")
    h = features
    for layer in channel.layers:
        h = gin_layer_forward(tape, h, graph, layer, training, dropout, rng)
    return h


def gcn_layer_forward(tape: Tape, h: Node, graph: EnterpriseGraph, w: Node) -> Node:
    """relu(D^-1/2 (A + I) D^-1/2 H W), degrees counted with the self-loop."""
    if h.shape[0] != graph.node_count:
        raise ShapeError(f"gcn layer: {h.shape[0]} feature rows for {graph.node_count} nodes")
    inv_sqrt = 1.0 / np.sqrt(graph.degrees() + 1.0)
    hs = tape.row_scale(h, inv_sqrt)
    prop = tape.row_scale(tape.add(hs, tape.neighbor_sum(hs, graph.adjacency)), inv_sqrt)
    return tape.activate(tape.matmul(prop, w), "relu")
