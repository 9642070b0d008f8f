"""Splitting, Adam, and the mini-batch training loop with early stopping.

Batches are sets of training *nodes*: every optimizer step runs the full graph
forward (all nodes take part in message passing) and the loss is taken over
the batch's nodes only.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ConfigError, NumericError, UndefinedMetricError
from .gin import aggregation_gain
from .graph import EnterpriseGraph
from .metrics import roc_auc
from .model import RiskModel, Variant
from .numcore import Tape

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        fr = (self.train, self.val, self.test)
        if min(fr) <= 0 or not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
            raise ConfigError(f"split fractions must be positive and sum to 1, got {fr}")


class Split(NamedTuple):
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_train = math.floor(spec.train * n + 1e-9)
    n_val = math.floor(spec.val * n + 1e-9)
    return n_train, n_val, n - n_train - n_val


def split_dataset(n: int, labels=None, spec: SplitSpec = SplitSpec()) -> Split:
    """Disjoint sorted index arrays covering range(n).

    Stratified splits hold ``round(rate * size)`` positives in val and test,
    which keeps every split within one sample of the global positive rate.
    """
    if n < 10:
        raise ConfigError(f"need at least 10 samples to split, got {n}")
    sizes = split_sizes(n, spec)
    if min(sizes) < 1:
        raise ConfigError(f"split sizes {sizes} leave a split empty")
    rng = np.random.default_rng([spec.seed, 0x5B117])
    if not spec.stratified or labels is None:
        perm = rng.permutation(n)
        cuts = np.cumsum(sizes)[:-1]
        parts = np.split(perm, cuts)
    else:
        y = np.asarray(labels).ravel().astype(int)
        if y.size != n:
            raise ConfigError(f"{y.size} labels for {n} samples")
        pos = rng.permutation(np.flatnonzero(y == 1))
        neg = rng.permutation(np.flatnonzero(y == 0))
        rate = pos.size / n
        n_val_pos = min(round(rate * sizes[1]), pos.size)
        n_test_pos = min(round(rate * sizes[2]), pos.size - n_val_pos)
        pos_counts = (pos.size - n_val_pos - n_test_pos, n_val_pos, n_test_pos)
        neg_counts = tuple(s - p for s, p in zip(sizes, pos_counts))
        if min(neg_counts) < 0:
            raise ConfigError("too few negatives to stratify this split")
        parts = []
        p0 = q0 = 0
        for pc, nc in zip(pos_counts, neg_counts):
            parts.append(np.concatenate([pos[p0 : p0 + pc], neg[q0 : q0 + nc]]))
            p0 += pc
            q0 += nc
    return Split(*(np.sort(p) for p in parts))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 100
    l2_coeff: float = 0.01
    dropout: float = 0.2
    patience: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError(f"invalid training configuration {self}")
        if self.l2_coeff < 0:
            raise ConfigError(f"l2_coeff must be >= 0, got {self.l2_coeff}")
        if self.patience > self.max_epochs:
            raise ConfigError(f"patience {self.patience} exceeds max_epochs {self.max_epochs}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")


@dataclass
class TrainState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    best_val_loss: float = math.inf
    best_epoch: int = 0
    epochs_since_improvement: int = 0
    best_params: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def fresh(cls, params: Mapping[str, np.ndarray]) -> "TrainState":
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: TrainState,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> TrainState:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    for k, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for {k} at step {state.t + 1}")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for k, g in grads.items():
        m = state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        v = state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


@dataclass
class History:
    epoch: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_auc: list[float] = field(default_factory=list)

    COLUMNS = ("epoch", "train_loss", "val_loss", "val_auc")

    def append(self, epoch: int, train_loss: float, val_loss: float, val_auc: float) -> None:
        self.epoch.append(epoch)
        self.train_loss.append(train_loss)
        self.val_loss.append(val_loss)
        self.val_auc.append(val_auc)

    def rows(self):
        return zip(self.epoch, self.train_loss, self.val_loss, self.val_auc)

    def write_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for e, tl, vl, va in self.rows():
                w.writerow([e, repr(tl), repr(vl), repr(va)])


@dataclass
class TrainResult:
    model: RiskModel
    history: History
    state: TrainState

    @property
    def best_epoch(self) -> int:
        return self.state.best_epoch


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _safe_auc(p, y) -> float:
    try:
        return roc_auc(p, y)
    except UndefinedMetricError:
        return math.nan


def loss_and_grads(
    model: RiskModel,
    params: Mapping[str, np.ndarray],
    features: Mapping[str, np.ndarray],
    graph: EnterpriseGraph,
    labels: np.ndarray,
    batch: np.ndarray,
    l2_coeff: float,
    training: bool = True,
    rng: np.random.Generator | None = None,
) -> tuple[float, float, dict[str, np.ndarray]]:
    """Penalized batch loss, its data (cross-entropy) part, and gradients.

    ``training=True`` with ``model.dropout = 0`` gives a deterministic
    function of ``params`` suitable for gradient checking.
    """
    tape = Tape()
    out = model.forward(tape, features, graph, training=training, rng=rng, params=params, track_grad=True)
    p_batch = tape.take_rows(out.proba, batch)
    data_loss = tape.bce(p_batch, labels[batch])
    loss = data_loss
    if l2_coeff > 0:
        penalty = None
        for k in model.weight_names():
            sq = tape.sum_squares(out.nodes[k])
            penalty = sq if penalty is None else tape.add(penalty, sq)
        if penalty is not None:
            loss = tape.add(data_loss, tape.scale(penalty, l2_coeff))
    tape.backward(loss)
    grads = {k: (n.grad if n.grad is not None else np.zeros_like(n.value)) for k, n in out.nodes.items()}
    return float(loss.value[0, 0]), float(data_loss.value[0, 0]), grads


def train_model(
    variant: str | Variant,
    features: Mapping[str, np.ndarray],
    graph: EnterpriseGraph,
    labels,
    split: Split,
    cfg: TrainConfig = TrainConfig(),
    model: RiskModel | None = None,
    **model_kw,
) -> TrainResult:
    """Train one variant transductively and return the best-validation snapshot.

    History records, per epoch and in eval mode, the cross-entropy on the
    train and validation nodes and the validation AUC.
    """
    y = np.asarray(labels, dtype=np.float64).ravel()
    if model is None:
        in_dims = {c: x.shape[1] for c, x in features.items() if x is not None}
        model_kw.setdefault("agg_gain", aggregation_gain(graph))
        model = RiskModel.create(variant, in_dims, seed=cfg.seed, dropout=cfg.dropout, **model_kw)
    state = TrainState.fresh(model.params)
    history = History()
    shuffle_rng = np.random.default_rng([cfg.seed, 0x5A0FF1E])
    drop_rng = np.random.default_rng([cfg.seed, 0xD80])
    train_idx = np.asarray(split.train)
    state.best_params = {k: v.copy() for k, v in model.params.items()}

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(train_idx)
        for step, lo in enumerate(range(0, order.size, cfg.batch_size)):
            batch = order[lo : lo + cfg.batch_size]
            try:
                loss, _, grads = loss_and_grads(
                    model, model.params, features, graph, y, batch, cfg.l2_coeff, True, drop_rng
                )
            except NumericError as exc:
                raise NumericError(f"training diverged at epoch {epoch}, step {step}: {exc}") from exc
            if not math.isfinite(loss):
                raise NumericError(f"training diverged at epoch {epoch}, step {step}: loss {loss}")
            adam_step(model.params, grads, state, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)

        proba, _ = model.predict(features, graph, exact=False)
        train_loss = _bce(proba[train_idx], y[train_idx])
        val_loss = _bce(proba[split.val], y[split.val])
        val_auc = _safe_auc(proba[split.val], y[split.val])
        history.append(epoch, train_loss, val_loss, val_auc)
        log.debug("%s epoch %d train %.4f val %.4f auc %.4f", model.variant.name, epoch,
                  train_loss, val_loss, val_auc)

        if val_loss < state.best_val_loss:
            state.best_val_loss = val_loss
            state.best_epoch = epoch
            state.epochs_since_improvement = 0
            state.best_params = {k: v.copy() for k, v in model.params.items()}
        else:
            state.epochs_since_improvement += 1
            if state.epochs_since_improvement >= cfg.patience:
                break

    model.params = {k: v.copy() for k, v in state.best_params.items()}
    return TrainResult(model, history, state)


def train_logreg(x_structured, labels, split: Split, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Logistic regression on Z-scored ratios with the same loop and penalty.

    The graph is a placeholder: the linear variant never propagates.
    """
    x = np.asarray(x_structured, dtype=np.float64)
    graph = EnterpriseGraph.from_edges(x.shape[0], [])
    return train_model("LR", {"S": x}, graph, labels, split, cfg)


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
