"""Channel fusion (uniform mean, concat+FC, attention), gating, the sigmoid
risk head and the cross-entropy objective. All functions act on tape nodes so
gradients reach every parameter."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ShapeError
from .numcore import Node, Tape

PROB_CLAMP = 1e-7


def _same_width(hs: Sequence[Node]) -> None:
    shapes = {h.shape for h in hs}
    if len(shapes) != 1:
        raise ShapeError(f"channel embeddings differ in shape: {[h.shape for h in hs]}")


def attention_weights(tape: Tape, hs: Sequence[Node], w: Node, b: Node) -> Node:
    """Softmax over channels of a shared affine score ``h @ w + b``.

    Returns an (n, n_channels) matrix whose rows sum to one.
    """
    _same_width(hs)
    if w.shape != (hs[0].shape[1], 1):
        raise ShapeError(f"attention scorer {w.shape} does not fit embeddings {hs[0].shape}")
    scores = tape.concat([tape.affine(h, w, b) for h in hs])
    return tape.row_softmax(scores)


def fuse_attention(tape: Tape, hs: Sequence[Node], alpha: Node) -> Node:
    """Per-node convex combination sum_i alpha[:, i] * h_i."""
    _same_width(hs)
    if alpha.shape[1] != len(hs):
        raise ShapeError(f"{alpha.shape[1]} attention columns for {len(hs)} channels")
    out = tape.mul(tape.column(alpha, 0), hs[0])
    for i in range(1, len(hs)):
        out = tape.add(out, tape.mul(tape.column(alpha, i), hs[i]))
    return out


def uniform_alpha(tape: Tape, n_channels: int) -> Node:
    return tape.const(np.full((1, n_channels), 1.0 / n_channels))


def fuse_v1(tape: Tape, hs: Sequence[Node]) -> Node:
    # same code path as attention with alpha fixed, so the two agree bit for bit
    return fuse_attention(tape, hs, uniform_alpha(tape, len(hs)))


def fuse_v2(tape: Tape, hs: Sequence[Node], w: Node, b: Node) -> Node:
    """relu(FC([h_1; ...; h_c]))."""
    _same_width(hs)
    return tape.activate(tape.affine(tape.concat(hs), w, b), "relu")


def gate(tape: Tape, h: Node, w_g: Node, b_g: Node) -> Node:
    """h * sigmoid(h @ W_g + b_g), elementwise."""
    return tape.mul(h, tape.activate(tape.affine(h, w_g, b_g), "sigmoid"))


def predict_proba(tape: Tape, h: Node, w: Node, b: Node) -> Node:
    """Risk probability per node, clamped to [1e-7, 1 - 1e-7]."""
    p = tape.activate(tape.affine(h, w, b), "sigmoid")
    return tape.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce_loss(tape: Tape, p: Node, y) -> Node:
    return tape.bce(p, y)
