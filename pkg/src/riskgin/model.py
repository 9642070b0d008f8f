"""Model variants: the proposed attention+gate fusion (V3), the simpler fusions
(V1 mean, V2 concat+FC), single/bi-channel GINs, leave-one-channel-out
ablations, and the GCN and logistic-regression baselines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import fusion
from .errors import ConfigError, ShapeError
from .gin import channel_encode, channel_from_nodes, gcn_layer_forward, glorot, init_gin_channel, param_rng
from .graph import EnterpriseGraph
from .numcore import Node, Tape

CHANNELS = ("S", "T", "G")
CHANNEL_KIND = {"S": "structured", "T": "text", "G": "graph"}
GCN_LAYERS = 2


@dataclass(frozen=True)
class Variant:
    name: str
    label: str
    fusion_label: str
    channels: tuple[str, ...]
    encoder: str = "gin"  # gin | gcn | linear
    fusion: str = "none"  # none | mean | concat | attention
    gate: bool = False


_VARIANT_LIST = [
    Variant("LR", "Logistic Regression", "--", ("S",), encoder="linear"),
    Variant("GCN", "GCN", "Graph-only", CHANNELS, encoder="gcn"),
    Variant("single-S", "GIN (Structured only)", "Single-view", ("S",)),
    Variant("single-T", "GIN (Text only)", "Single-view", ("T",)),
    Variant("single-G", "GIN (Graph only)", "Single-view", ("G",)),
    Variant("bi-ST", "Bi-Channel GIN (S+T)", "Concatenation", ("S", "T"), fusion="concat"),
    Variant("bi-SG", "Bi-Channel GIN (S+G)", "Concatenation", ("S", "G"), fusion="concat"),
    Variant("bi-TG", "Bi-Channel GIN (T+G)", "Concatenation", ("T", "G"), fusion="concat"),
    Variant("V1", "Multi-Channel GIN (V1)", "Simple weighted average", CHANNELS, fusion="mean"),
    Variant("V2", "Multi-Channel GIN (V2)", "FC fusion", CHANNELS, fusion="concat"),
    Variant("V3", "Multi-Channel GIN (V3)", "GIN + gating + attention", CHANNELS, fusion="attention", gate=True),
    Variant("V3-noS", "Without Structured Channel", "GIN + gating + attention", ("T", "G"), fusion="attention", gate=True),
    Variant("V3-noT", "Without Text Channel", "GIN + gating + attention", ("S", "G"), fusion="attention", gate=True),
    Variant("V3-noG", "Without Graph Channel", "GIN + gating + attention", ("S", "T"), fusion="attention", gate=True),
]
VARIANTS: dict[str, Variant] = {v.name: v for v in _VARIANT_LIST}

# Table-1 style labels for the ablation rows; the full model is V3 itself.
FULL_MODEL_LABEL = "Full Model (All Channels)"
ABLATION_ROWS = {"V3": FULL_MODEL_LABEL, "V3-noS": "Without Structured Channel",
                 "V3-noT": "Without Text Channel", "V3-noG": "Without Graph Channel"}
EXTERNAL_BASELINES = {"RF": "Random Forest", "XGBoost": "XGBoost"}


def get_variant(name: str) -> Variant:
    try:
        return VARIANTS[name]
    except KeyError:
        raise ConfigError(f"unknown model variant {name!r}; known: {', '.join(VARIANTS)}") from None


@dataclass
class ForwardOutput:
    proba: Node
    alpha: Node | None
    nodes: dict[str, Node]


@dataclass
class RiskModel:
    variant: Variant
    in_dims: dict[str, int]
    hidden: int = 64
    embed: int = 64
    dropout: float = 0.2
    uniform_attention: bool = False
    gate_open: bool = False
    agg_gain: float = 1.0
    params: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def create(cls, variant: str | Variant, in_dims: Mapping[str, int], seed: int = 0, **kw) -> "RiskModel":
        v = variant if isinstance(variant, Variant) else get_variant(variant)
        missing = [c for c in v.channels if c not in in_dims]
        if missing:
            raise ConfigError(f"variant {v.name} needs input widths for channels {missing}")
        model = cls(v, {c: int(in_dims[c]) for c in v.channels}, **kw)
        model.params = model.init_params(seed)
        return model

    @property
    def uses_attention(self) -> bool:
        return self.variant.fusion == "attention" and not self.uniform_attention

    @property
    def uses_gate(self) -> bool:
        return self.variant.gate and not self.gate_open

    def init_params(self, seed: int) -> dict[str, np.ndarray]:
        v, d = self.variant, self.embed
        params: dict[str, np.ndarray] = {}
        head_in = d
        if v.encoder == "linear":
            head_in = self.in_dims["S"]
        elif v.encoder == "gcn":
            width = sum(self.in_dims.values())
            for k in range(GCN_LAYERS):
                name = f"gcn.l{k}.w"
                params[name] = glorot(param_rng(seed, name), width, d)
                width = d
        else:
            for c in v.channels:
                params.update(init_gin_channel(c, self.in_dims[c], self.hidden, d, seed, self.agg_gain))
            if v.fusion == "concat":
                params["fc.w"] = glorot(param_rng(seed, "fc.w"), d * len(v.channels), d)
                params["fc.b"] = np.zeros((1, d))
            if self.uses_attention:
                params["att.w"] = np.zeros((d, 1))  # uniform weights at start
                params["att.b"] = np.zeros((1, 1))
            if self.uses_gate:
                params["gate.w"] = glorot(param_rng(seed, "gate.w"), d, d)
                params["gate.b"] = np.zeros((1, d))
        params["clf.w"] = glorot(param_rng(seed, "clf.w"), head_in, 1)
        params["clf.b"] = np.zeros((1, 1))
        return params

    def weight_names(self) -> list[str]:
        """Parameters subject to L2: weight matrices only (no biases, no epsilon)."""
        return [k for k in self.params if k.rsplit(".", 1)[-1].startswith("w")]

    def check_inputs(self, features: Mapping[str, np.ndarray], graph: EnterpriseGraph) -> None:
        for c in self.variant.channels:
            if c not in features or features[c] is None:
                raise ShapeError(f"variant {self.variant.name} needs {CHANNEL_KIND[c]} features")
            x = features[c]
            if x.shape != (graph.node_count, self.in_dims[c]):
                raise ShapeError(
                    f"{CHANNEL_KIND[c]} features {x.shape} do not match "
                    f"({graph.node_count}, {self.in_dims[c]})"
                )

    def forward(
        self,
        tape: Tape,
        features: Mapping[str, np.ndarray],
        graph: EnterpriseGraph,
        training: bool = False,
        rng: np.random.Generator | None = None,
        params: Mapping[str, np.ndarray] | None = None,
        track_grad: bool | None = None,
    ) -> ForwardOutput:
        """Build the forward pass on ``tape``. Parameters become leaves that
        track gradients when ``track_grad`` (default: ``training``) is set."""
        self.check_inputs(features, graph)
        values = self.params if params is None else params
        track = training if track_grad is None else track_grad
        nodes = {k: tape.leaf(val, requires_grad=track) for k, val in values.items()}
        v = self.variant
        rate = self.dropout
        alpha = None
        if v.encoder == "linear":
            h = tape.const(features["S"])
        elif v.encoder == "gcn":
            h = tape.const(np.hstack([features[c] for c in v.channels]))
            for k in range(GCN_LAYERS):
                h = gcn_layer_forward(tape, h, graph, nodes[f"gcn.l{k}.w"])
                h = tape.dropout(h, rate, training, rng)
        else:
            embs = [
                channel_encode(tape, tape.const(features[c]), graph,
                               channel_from_nodes(CHANNEL_KIND[c], c, nodes), training, rate, rng)
                for c in v.channels
            ]
            if v.fusion == "none":
                h = embs[0]
            elif v.fusion == "mean":
                h = fusion.fuse_v1(tape, embs)
            elif v.fusion == "concat":
                h = fusion.fuse_v2(tape, embs, nodes["fc.w"], nodes["fc.b"])
            else:
                if self.uses_attention:
                    alpha = fusion.attention_weights(tape, embs, nodes["att.w"], nodes["att.b"])
                else:
                    alpha = fusion.uniform_alpha(tape, len(embs))
                h = fusion.fuse_attention(tape, embs, alpha)
                if self.uses_gate:
                    h = fusion.gate(tape, h, nodes["gate.w"], nodes["gate.b"])
        proba = fusion.predict_proba(tape, h, nodes["clf.w"], nodes["clf.b"])
        return ForwardOutput(proba, alpha, nodes)

    def predict(self, features: Mapping[str, np.ndarray], graph: EnterpriseGraph,
                exact: bool = True) -> tuple[np.ndarray, np.ndarray | None]:
        """Eval-mode probabilities (n,) and attention weights (n, channels) if any.

        With ``exact`` the forward uses row-order-independent kernels, so
        results are bit-identical under any node relabeling. ``exact=False``
        is faster and still deterministic for a fixed node order.
        """
        out = self.forward(Tape(exact=exact), features, graph, training=False)
        alpha = None
        if out.alpha is not None:
            alpha = np.broadcast_to(out.alpha.value, (graph.node_count, out.alpha.shape[1])).copy()
        return out.proba.value[:, 0].copy(), alpha

    def describe(self) -> dict:
        return {
            "variant": self.variant.name,
            "in_dims": dict(self.in_dims),
            "hidden": self.hidden,
            "embed": self.embed,
            "dropout": self.dropout,
            "uniform_attention": self.uniform_attention,
            "gate_open": self.gate_open,
            "agg_gain": self.agg_gain,
        }

    @classmethod
    def from_description(cls, d: Mapping, params: Mapping[str, np.ndarray]) -> "RiskModel":
        model = cls(
            get_variant(d["variant"]),
            {k: int(x) for k, x in d["in_dims"].items()},
            hidden=int(d["hidden"]),
            embed=int(d["embed"]),
            dropout=float(d["dropout"]),
            uniform_attention=bool(d.get("uniform_attention", False)),
            gate_open=bool(d.get("gate_open", False)),
            agg_gain=float(d.get("agg_gain", 1.0)),
        )
        expected = model.init_params(0)
        if set(expected) != set(params):
            raise ShapeError(f"parameter names do not match variant {model.variant.name}")
        for k, arr in expected.items():
            if np.shape(params[k]) != arr.shape:
                raise ShapeError(f"parameter {k} has shape {np.shape(params[k])}, expected {arr.shape}")
        model.params = {k: np.array(params[k], dtype=np.float64) for k in expected}
        return model
