"""Two-layer mean-aggregation GNN with a softmax head, trained by hand-written backprop.

Layer ``l`` computes ``h_l = relu([h_{l-1} | M h_{l-1}] @ W_l)`` where ``M`` is
the row-normalized adjacency (``D^-1 A``, zero rows for isolated nodes). The
head is ``softmax(h_L @ W_out)`` over the classes (normal, SHS). There are
no bias terms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, NumericError, ShapeError
from .features import FeatureMatrix, build_features, normalize
from .graph import Graph, induced_subgraph_without
from .oracle import ShsResult, total_pairwise_connectivity

FORMAT_VERSION = 1
PROB_CLAMP = 1e-12
SHS = 1


# ---------------------------------------------------------------------------
# parameters and configuration


@dataclass
class ModelParams:
    layers: list[np.ndarray]
    output: np.ndarray
    feature_min: np.ndarray = field(default_factory=lambda: np.zeros(3))
    feature_max: np.ndarray = field(default_factory=lambda: np.ones(3))
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        widths = [self.layers[0].shape[0] // 2] if self.layers else []
        for idx, w in enumerate(self.layers, start=1):
            if w.shape[0] != 2 * widths[-1]:
                raise ShapeError(
                    f"layer {idx} expects input width {2 * widths[-1]}, weight has {w.shape[0]} rows"
                )
            widths.append(w.shape[1])
        if self.layers and self.output.shape[0] != widths[-1]:
            raise ShapeError(f"output weights need {widths[-1]} rows, got {self.output.shape[0]}")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def dims(self) -> list[int]:
        """``[input width, embedding width, class count]``."""
        return [self.layers[0].shape[0] // 2, self.output.shape[0], self.output.shape[1]]

    def tensors(self) -> list[np.ndarray]:
        return [*self.layers, self.output]

    def replace(self, tensors: Sequence[np.ndarray]) -> "ModelParams":
        *layers, output = tensors
        return ModelParams(
            list(layers), output, self.feature_min, self.feature_max, self.seed, dict(self.metadata)
        )

    def copy(self) -> "ModelParams":
        return self.replace([t.copy() for t in self.tensors()])


def init_params(
    seed: int,
    in_dim: int = 3,
    hidden: int = 32,
    num_layers: int = 2,
    num_classes: int = 2,
) -> ModelParams:
    """Glorot-uniform weights, fully determined by ``seed``."""
    rng = np.random.default_rng(seed)

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    layers = []
    width = in_dim
    for _ in range(num_layers):
        layers.append(glorot(2 * width, hidden))
        width = hidden
    return ModelParams(layers, glorot(width, num_classes), seed=seed)


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    hidden: int = 32
    num_layers: int = 2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # message passing during training never touches test nodes
    inductive: bool = True

    def __post_init__(self) -> None:
        self.split = tuple(float(f) for f in self.split)  # type: ignore[assignment]
        if len(self.split) != 3 or any(f <= 0 for f in self.split):
            raise ConfigError(f"split fractions must be three positive numbers, got {self.split}")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(self.split)}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")


# ---------------------------------------------------------------------------
# forward pass


@dataclass
class EmbeddingTable:
    layers: list[np.ndarray]

    @property
    def z(self) -> np.ndarray:
        return self.layers[-1]


@dataclass
class Prediction:
    probabilities: np.ndarray

    @property
    def y_hat(self) -> np.ndarray:
        return np.argmax(self.probabilities, axis=1)

    @property
    def shs_probability(self) -> np.ndarray:
        return self.probabilities[:, SHS]


def mean_operator(g: Graph, adjacency: sp.csr_matrix | None = None) -> sp.csr_matrix:
    """Row-normalized adjacency ``D^-1 A``."""
    a = g.adjacency_matrix() if adjacency is None else adjacency
    deg = np.diff(a.indptr)
    data = np.repeat(1.0 / np.maximum(deg, 1), deg)
    return sp.csr_matrix((data, a.indices, a.indptr), shape=a.shape)


def _as_operator(g: Graph | sp.spmatrix) -> sp.csr_matrix:
    return mean_operator(g) if isinstance(g, Graph) else g


def aggregate_neighbors(h_prev: np.ndarray, g: Graph, i: int) -> np.ndarray:
    nbrs = g.neighbors(i)
    if not nbrs:
        return np.zeros(h_prev.shape[1])
    return np.sum(h_prev[nbrs], axis=0) / len(nbrs)


def combine(h_self: np.ndarray, h_agg: np.ndarray, w: np.ndarray) -> np.ndarray:
    h_self = np.asarray(h_self, dtype=np.float64)
    h_agg = np.asarray(h_agg, dtype=np.float64)
    if h_self.shape[-1] != h_agg.shape[-1] or w.shape[0] != 2 * h_self.shape[-1]:
        raise ShapeError(
            f"cannot combine widths {h_self.shape[-1]} and {h_agg.shape[-1]} with weights {w.shape}"
        )
    return np.maximum(np.concatenate([h_self, h_agg], axis=-1) @ w, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class _Cache:
    inputs: list[np.ndarray]  # concatenated [h | Mh] per layer
    pre: list[np.ndarray]
    hidden: list[np.ndarray]
    probs: np.ndarray


def _forward(op: sp.csr_matrix, x: np.ndarray, p: ModelParams) -> _Cache:
    h = x
    hidden = [h]
    inputs, pre = [], []
    for idx, w in enumerate(p.layers, start=1):
        c = np.concatenate([h, op @ h], axis=1)
        with np.errstate(over="ignore", invalid="ignore"):  # checked just below
            s = c @ w
        h = np.maximum(s, 0.0)
        if not np.all(np.isfinite(h)):
            raise NumericError(f"non-finite activation in layer {idx}", layer=idx)
        inputs.append(c)
        pre.append(s)
        hidden.append(h)
    with np.errstate(over="ignore", invalid="ignore"):
        logits = h @ p.output
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in output layer", layer=len(p.layers) + 1)
    return _Cache(inputs, pre, hidden, softmax(logits))


def forward(
    g: Graph | sp.spmatrix, x: np.ndarray | FeatureMatrix, p: ModelParams
) -> tuple[EmbeddingTable, Prediction]:
    """Run all aggregation layers and the softmax head.

    ``x`` is the normalized feature array; a :class:`FeatureMatrix` is
    normalized with its own stored statistics first.
    """
    if isinstance(x, FeatureMatrix):
        x = normalize(x)
    cache = _forward(_as_operator(g), np.asarray(x, dtype=np.float64), p)
    return EmbeddingTable(cache.hidden), Prediction(cache.probs)


# ---------------------------------------------------------------------------
# loss and gradients


def _mask_index(mask, n: int) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype == bool:
        if mask.shape != (n,):
            raise ShapeError(f"boolean mask must have length {n}")
        return np.flatnonzero(mask)
    return mask.astype(np.int64).ravel()


def bce_loss(probabilities: np.ndarray | Prediction, labels, mask) -> float:
    """Mean binary cross-entropy of the SHS-class probability over ``mask``."""
    probs = probabilities.probabilities if isinstance(probabilities, Prediction) else probabilities
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        y_hat_all = probs
    else:
        y_hat_all = probs[:, SHS]
    idx = _mask_index(mask, len(y_hat_all))
    if idx.size == 0:
        raise ConfigError("loss mask selects no nodes")
    y = np.asarray(labels, dtype=np.float64)[idx]
    y_hat = np.clip(y_hat_all[idx], PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(y * np.log(y_hat) + (1.0 - y) * np.log(1.0 - y_hat)))


def decay_penalty(p: ModelParams, weight_decay: float) -> float:
    return 0.5 * weight_decay * sum(float(np.sum(t * t)) for t in p.tensors())


def objective(g, x, p: ModelParams, labels, mask, weight_decay: float = 0.0) -> float:
    """Training objective whose exact gradient :func:`backward` returns."""
    _, pred = forward(g, x, p)
    return bce_loss(pred, labels, mask) + decay_penalty(p, weight_decay)


@dataclass
class Gradients:
    """Per-tensor gradients in :meth:`ModelParams.tensors` order."""

    data: list[np.ndarray]
    decay: list[np.ndarray]

    @property
    def total(self) -> list[np.ndarray]:
        return [d + w for d, w in zip(self.data, self.decay)]

    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(t * t)) for t in self.total))


def _backward_from_cache(
    op: sp.csr_matrix, cache: _Cache, p: ModelParams, labels, idx: np.ndarray
) -> list[np.ndarray]:
    probs = cache.probs
    n = probs.shape[0]
    r = idx.size
    y = np.asarray(labels, dtype=np.float64)
    p1 = probs[idx, SHS]
    inside = (p1 >= PROB_CLAMP) & (p1 <= 1.0 - PROB_CLAMP)
    # d(mean BCE)/d(logit_SHS) = (p1 - y) / r for a two-class softmax; the
    # clamp has zero slope outside its range.
    g1 = np.where(inside, (p1 - y[idx]) / r, 0.0)
    d_logits = np.zeros((n, probs.shape[1]))
    d_logits[idx, SHS] = g1
    d_logits[idx, 1 - SHS] = -g1

    grads: list[np.ndarray] = [np.empty(0)] * (len(p.layers) + 1)
    grads[-1] = cache.hidden[-1].T @ d_logits
    d_h = d_logits @ p.output.T
    op_t = op.T.tocsr()
    for l in range(len(p.layers) - 1, -1, -1):
        d_pre = d_h * (cache.pre[l] > 0)
        grads[l] = cache.inputs[l].T @ d_pre
        if l == 0:
            break
        d_c = d_pre @ p.layers[l].T
        width = d_c.shape[1] // 2
        d_h = d_c[:, :width] + op_t @ d_c[:, width:]
    return grads


def backward(g, x, p: ModelParams, labels, mask, weight_decay: float = 0.0) -> Gradients:
    """Exact gradients of ``bce_loss + weight_decay/2 * sum(W**2)``."""
    op = _as_operator(g)
    if isinstance(x, FeatureMatrix):
        x = normalize(x)
    cache = _forward(op, np.asarray(x, dtype=np.float64), p)
    idx = _mask_index(mask, cache.probs.shape[0])
    if idx.size == 0:
        raise ConfigError("loss mask selects no nodes")
    data = _backward_from_cache(op, cache, p, labels, idx)
    return Gradients(data, [weight_decay * t for t in p.tensors()])


# ---------------------------------------------------------------------------
# optimizer


class AdamState:
    def __init__(self, p: ModelParams) -> None:
        self.m = [np.zeros_like(t) for t in p.tensors()]
        self.v = [np.zeros_like(t) for t in p.tensors()]


def adam_step(
    p: ModelParams,
    grads: Gradients | Sequence[np.ndarray],
    t: int,
    cfg: TrainConfig,
    state: AdamState,
) -> ModelParams:
    """One bias-corrected Adam update; weight decay arrives inside ``grads``."""
    if t < 1:
        raise ConfigError("Adam step index starts at 1")
    g_list = grads.total if isinstance(grads, Gradients) else list(grads)
    b1, b2 = cfg.beta1, cfg.beta2
    new = []
    for k, (w, g) in enumerate(zip(p.tensors(), g_list)):
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = state.m[k] / (1.0 - b1**t)
        v_hat = state.v[k] / (1.0 - b2**t)
        new.append(w - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps))
    return p.replace(new)


# ---------------------------------------------------------------------------
# data split and training


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_nodes(n: int, cfg: TrainConfig, labels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded train/val/test split, stratified on the SHS label.

    Split sizes are ``round(n * fraction)`` for train and validation, the rest
    for test; SHS nodes are apportioned the same way, with at least one per
    split once there are three or more.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ConfigError(f"need one label per node ({n}), got {labels.shape}")
    fr, fv, _ = cfg.split
    sizes = [_round_half_up(n * fr), _round_half_up(n * fv)]
    sizes.append(n - sum(sizes))
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels != 1)
    k = pos.size
    pos_sizes = [_round_half_up(k * fr), _round_half_up(k * fv)]
    pos_sizes.append(k - sum(pos_sizes))
    if k >= 3:
        for s in range(3):
            if pos_sizes[s] == 0:
                donor = int(np.argmax(pos_sizes))
                pos_sizes[donor] -= 1
                pos_sizes[s] += 1
    neg_sizes = [a - b for a, b in zip(sizes, pos_sizes)]
    if min(pos_sizes) < 0 or min(neg_sizes) < 0 or min(sizes) < 1:
        raise ConfigError(f"cannot split n={n} nodes with {k} SHS labels into {cfg.split}")

    rng = np.random.default_rng([cfg.seed, 1])
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    out = []
    pa = na = 0
    for ps, ns in zip(pos_sizes, neg_sizes):
        part = np.concatenate([pos[pa : pa + ps], neg[na : na + ns]])
        out.append(np.sort(part))
        pa += ps
        na += ns
    return out[0], out[1], out[2]


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_accuracy: float
    val_accuracy: float
    val_loss: float


def accuracy(pred: Prediction | np.ndarray, labels, nodes) -> float:
    y_hat = pred.y_hat if isinstance(pred, Prediction) else np.asarray(pred)
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        return float("nan")
    return float(np.mean(y_hat[nodes] == np.asarray(labels)[nodes]))


def class_metrics(y_hat, labels, nodes) -> dict[str, float]:
    """Accuracy plus precision/recall/F1 of the SHS class on ``nodes``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    yh = np.asarray(y_hat)[nodes]
    y = np.asarray(labels)[nodes]
    tp = int(np.sum((yh == 1) & (y == 1)))
    fp = int(np.sum((yh == 1) & (y == 0)))
    fn = int(np.sum((yh == 0) & (y == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": float(np.mean(yh == y)) if nodes.size else float("nan"),
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


@dataclass
class TrainResult:
    params: ModelParams
    log: list[EpochRecord]
    train_nodes: np.ndarray
    val_nodes: np.ndarray
    test_nodes: np.ndarray
    best_epoch: int


def fit(g: Graph, fm: FeatureMatrix | None, labels, cfg: TrainConfig) -> TrainResult:
    """Full-batch training; keeps the epoch with the best validation accuracy.

    Ties on validation accuracy go to the lower validation loss, then the
    earlier epoch. When ``cfg.inductive`` is set the test nodes are isolated
    while training and validating, and features are computed on that graph.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (g.n,):
        raise ConfigError(f"need one label per node ({g.n}), got {labels.shape}")
    if not np.any(labels == 1):
        raise ConfigError("labels contain no SHS node")
    train_idx, val_idx, test_idx = split_nodes(g.n, cfg, labels)

    if cfg.inductive:
        g_fit = induced_subgraph_without(g, test_idx.tolist())
        fm_fit = build_features(g_fit)
    else:
        g_fit = g
        fm_fit = fm if fm is not None else build_features(g)
    x = normalize(fm_fit)
    op = mean_operator(g_fit)

    params = init_params(cfg.seed, fm_fit.shape[1], cfg.hidden, cfg.num_layers)
    params.feature_min = fm_fit.col_min.copy()
    params.feature_max = fm_fit.col_max.copy()
    params.metadata = {
        "epochs": cfg.epochs,
        "learning_rate": cfg.learning_rate,
        "weight_decay": cfg.weight_decay,
        "split": list(cfg.split),
        "inductive": cfg.inductive,
        "best_epoch": 0,
    }
    state = AdamState(params)
    log: list[EpochRecord] = []
    best = params.copy()
    best_key = (-1.0, -math.inf)
    best_epoch = 0

    for epoch in range(1, cfg.epochs + 1):
        try:
            cache = _forward(op, x, params)
            loss = bce_loss(cache.probs, labels, train_idx) + decay_penalty(params, cfg.weight_decay)
            if not math.isfinite(loss):
                raise NumericError("loss is not finite")
            train_acc = accuracy(Prediction(cache.probs), labels, train_idx)
            data = _backward_from_cache(op, cache, params, labels, train_idx)
            grads = Gradients(data, [cfg.weight_decay * t for t in params.tensors()])
            params = adam_step(params, grads, epoch, cfg, state)
            after = _forward(op, x, params)
        except NumericError as exc:
            raise NumericError(f"training diverged at epoch {epoch}: {exc}", layer=exc.layer, epoch=epoch) from exc
        val_acc = accuracy(Prediction(after.probs), labels, val_idx)
        val_loss = bce_loss(after.probs, labels, val_idx)
        log.append(EpochRecord(epoch, loss, train_acc, val_acc, val_loss))
        key = (val_acc, -val_loss)
        if key > best_key:
            best_key, best, best_epoch = key, params.copy(), epoch

    best.metadata["best_epoch"] = best_epoch
    return TrainResult(best, log, train_idx, val_idx, test_idx, best_epoch)


def train(g: Graph, fm: FeatureMatrix | None, labels, cfg: TrainConfig) -> tuple[ModelParams, list[EpochRecord]]:
    result = fit(g, fm, labels, cfg)
    return result.params, result.log


# ---------------------------------------------------------------------------
# application


def snapshot_features(g: Graph, p: ModelParams, adjacency: sp.csr_matrix | None = None) -> np.ndarray:
    """Recompute raw features on ``g`` and scale them with the training statistics."""
    fm = build_features(g, adjacency)
    return normalize(fm.with_stats(p.feature_min, p.feature_max))


def predict_proba(g: Graph, p: ModelParams) -> Prediction:
    a = g.adjacency_matrix()
    return Prediction(_forward(mean_operator(g, a), snapshot_features(g, p, a), p).probs)


def top_k_from_scores(scores: np.ndarray, k: int) -> list[int]:
    # stable sort on -score keeps lower ids first among ties
    order = np.argsort(-np.asarray(scores), kind="stable")
    return [int(i) for i in order[:k]]


def predict(g: Graph, p: ModelParams, k: int, residual: bool = True) -> ShsResult:
    """The k nodes with the highest SHS probability on a (new) snapshot."""
    if k < 0 or k > g.n:
        raise ConfigError(f"k must lie in [0, {g.n}], got {k}")
    if k == 0:
        return ShsResult([], total_pairwise_connectivity(g) if residual else -1)
    chosen = top_k_from_scores(predict_proba(g, p).shs_probability, k)
    res = total_pairwise_connectivity(induced_subgraph_without(g, chosen)) if residual else -1
    return ShsResult(chosen, res)


# ---------------------------------------------------------------------------
# serialization


def params_to_dict(p: ModelParams) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dims": p.dims,
        "L": p.num_layers,
        "layers": [w.tolist() for w in p.layers],
        "output": p.output.tolist(),
        "feature_normalization": {
            "min": p.feature_min.tolist(),
            "max": p.feature_max.tolist(),
        },
        "seed": p.seed,
        "training": p.metadata,
    }


def params_from_dict(doc: dict) -> ModelParams:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported model format_version {doc.get('format_version')!r}")
    layers = [np.array(w, dtype=np.float64) for w in doc["layers"]]
    if len(layers) != doc["L"]:
        raise ShapeError(f"model declares L={doc['L']} but stores {len(layers)} layers")
    p = ModelParams(
        layers,
        np.array(doc["output"], dtype=np.float64),
        np.array(doc["feature_normalization"]["min"], dtype=np.float64),
        np.array(doc["feature_normalization"]["max"], dtype=np.float64),
        doc.get("seed"),
        dict(doc.get("training", {})),
    )
    if p.dims != list(doc["dims"]):
        raise ShapeError(f"weights imply dims {p.dims}, file declares {doc['dims']}")
    return p


def save_model(p: ModelParams, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(params_to_dict(p), fh, indent=1)
        fh.write("\n")


def load_model(path: str | Path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
