"""Link prediction between population nodes.

Two message-passing branches run over the same node features: a two-layer
multi-head attention branch and a two-layer symmetric-normalized convolution
branch. Their outputs fuse by elementwise sum (or by learned softmax scalars
in the weighted ablation) and an MLP scores ordered node pairs. Training uses
binary cross-entropy on observed edges against freshly sampled negatives each
epoch, with a precision sweep on held-out edges picking the decision
threshold.

All math runs in float64 on a single thread, and every parameter is drawn
from a seeded numpy generator, so training is bit-reproducible for a given
seed and input.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .errors import FormatError, StateError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD_GRID = tuple(round(0.05 * i, 2) for i in range(10, 19))  # 0.50 .. 0.90
_MAGIC = "crosstraj-model"


@dataclass(frozen=True)
class ModelConfig:
    in_dim: int = 2048
    gat_heads: int = 4
    gat_hidden: int = 64  # per head; concat width = heads * hidden
    gcn_hidden: int = 192
    out_dim: int = 256
    scorer_hidden: int = 128
    fusion: str = "residual"  # "residual" (sum) or "weighted_sum" (softmax scalars)
    use_gat: bool = True  # False swaps the attention branch for a conv twin
    leaky_slope: float = 0.2
    lr: float = 1e-5
    weight_decay: float = 0.01
    epochs: int = 100
    batches_per_epoch: int = 8
    neg_ratio: float = 1.0
    threshold_grid: Tuple[float, ...] = DEFAULT_THRESHOLD_GRID

    def __post_init__(self):
        if self.fusion not in ("residual", "weighted_sum"):
            raise ValidationError(f"unknown fusion mode {self.fusion!r}")
        if self.use_gat and self.gat_heads * self.gat_hidden != self.out_dim:
            raise ValidationError("attention concat width must equal out_dim")
        if not self.threshold_grid:
            raise ValidationError("threshold grid is empty")


def make_ablation(config: ModelConfig, kind: str) -> ModelConfig:
    """Derive an ablated configuration: "none", "no_gat" or "no_fusion"."""
    if kind == "none":
        return config
    if kind == "no_gat":
        return ModelConfig(**{**asdict(config), "use_gat": False})
    if kind == "no_fusion":
        return ModelConfig(**{**asdict(config), "fusion": "weighted_sum"})
    raise ValidationError(f"unknown ablation {kind!r}")


@dataclass
class PredictedEdge:
    src: str
    dst: str
    probability: float


@dataclass
class TrainReport:
    seed: int
    epochs: int
    n_nodes: int
    n_pos_edges: int
    n_params: int
    train_losses: List[float]
    val_losses: List[float]
    threshold_table: List[Tuple[float, Optional[float]]]
    threshold: float
    val_balanced_acc: float
    test_balanced_acc: float
    test_precision: Optional[float]
    test_recall: float
    wall_time_s: float

    def to_dict(self) -> dict:
        return asdict(self)


class Model:
    """Parameter container plus forward passes; not tied to a file format."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.params: Dict[str, torch.Tensor] = {}
        rng = np.random.default_rng(seed)
        c = config

        if c.use_gat:
            width = c.gat_heads * c.gat_hidden
            self._add("att1.W", (c.in_dim, width), c.in_dim, rng)
            self._add("att1.b", (width,), c.in_dim, rng)
            self._add("att1.a_src", (c.gat_heads, c.gat_hidden), c.gat_hidden, rng)
            self._add("att1.a_dst", (c.gat_heads, c.gat_hidden), c.gat_hidden, rng)
            self._add("att2.W", (width, width), width, rng)
            self._add("att2.b", (width,), width, rng)
            self._add("att2.a_src", (c.gat_heads, c.gat_hidden), c.gat_hidden, rng)
            self._add("att2.a_dst", (c.gat_heads, c.gat_hidden), c.gat_hidden, rng)
        else:
            self._add("sub1.W", (c.in_dim, c.out_dim), c.in_dim, rng)
            self._add("sub1.b", (c.out_dim,), c.in_dim, rng)
            self._add("sub2.W", (c.out_dim, c.out_dim), c.out_dim, rng)
            self._add("sub2.b", (c.out_dim,), c.out_dim, rng)

        self._add("conv1.W", (c.in_dim, c.gcn_hidden), c.in_dim, rng)
        self._add("conv1.b", (c.gcn_hidden,), c.in_dim, rng)
        self._add("conv2.W", (c.gcn_hidden, c.out_dim), c.gcn_hidden, rng)
        self._add("conv2.b", (c.out_dim,), c.gcn_hidden, rng)

        if c.fusion == "weighted_sum":
            self._add("fusion.logits", (2,), 1, rng, zero=True)

        self._add("scorer.W1", (2 * c.out_dim, c.scorer_hidden), 2 * c.out_dim, rng)
        self._add("scorer.b1", (c.scorer_hidden,), 2 * c.out_dim, rng)
        self._add("scorer.W2", (c.scorer_hidden, 1), c.scorer_hidden, rng)
        self._add("scorer.b2", (1,), c.scorer_hidden, rng)

        self.last_attention: List[np.ndarray] = []

    def _add(self, name, shape, fan_in, rng, zero=False):
        if zero:
            arr = np.zeros(shape, dtype=np.float64)
        else:
            bound = 1.0 / math.sqrt(fan_in)
            arr = rng.uniform(-bound, bound, size=shape)
        self.params[name] = torch.tensor(arr, dtype=torch.float64, requires_grad=True)

    @property
    def n_params(self) -> int:
        return sum(p.numel() for p in self.params.values())

    def parameter_groups(self) -> Dict[str, torch.Tensor]:
        return dict(self.params)

    # -- forward ------------------------------------------------------------

    def _masks(self, n: int, edges: Sequence[Tuple[int, int]]):
        adj = torch.zeros((n, n), dtype=torch.bool)
        for u, v in edges:
            adj[u, v] = True
            adj[v, u] = True
        adj.fill_diagonal_(True)
        deg = adj.to(torch.float64).sum(dim=1)
        d_inv_sqrt = deg.pow(-0.5)
        norm = d_inv_sqrt.unsqueeze(1) * adj.to(torch.float64) * d_inv_sqrt.unsqueeze(0)
        return adj, norm

    def _attention_layer(self, h, adj, layer: str, keep: bool):
        c = self.config
        n = h.shape[0]
        wh = (h @ self.params[f"{layer}.W"] + self.params[f"{layer}.b"]).reshape(
            n, c.gat_heads, c.gat_hidden
        )
        src = torch.einsum("nhd,hd->hn", wh, self.params[f"{layer}.a_src"])
        dst = torch.einsum("nhd,hd->hn", wh, self.params[f"{layer}.a_dst"])
        scores = torch.nn.functional.leaky_relu(
            dst.unsqueeze(2) + src.unsqueeze(1), negative_slope=c.leaky_slope
        )
        scores = scores.masked_fill(~adj.unsqueeze(0), float("-inf"))
        alpha = torch.softmax(scores, dim=2)
        if keep:
            self.last_attention.append(alpha.detach().numpy().copy())
        out = torch.einsum("hij,jhd->ihd", alpha, wh)
        return out.reshape(n, c.gat_heads * c.gat_hidden)

    def embed(
        self,
        features: torch.Tensor,
        edges: Sequence[Tuple[int, int]],
        keep_attention: bool = False,
    ) -> torch.Tensor:
        """Fused node embeddings; `edges` drive message passing only."""
        if features.dim() != 2 or features.shape[1] != self.config.in_dim:
            raise ValidationError(
                f"expected features of width {self.config.in_dim}, got {tuple(features.shape)}"
            )
        n = features.shape[0]
        adj, norm = self._masks(n, edges)
        self.last_attention = []

        if self.config.use_gat:
            h = self._attention_layer(features, adj, "att1", keep_attention)
            h = torch.nn.functional.elu(h)
            branch_a = self._attention_layer(h, adj, "att2", keep_attention)
        else:
            h = torch.relu(norm @ features @ self.params["sub1.W"] + self.params["sub1.b"])
            branch_a = norm @ h @ self.params["sub2.W"] + self.params["sub2.b"]

        g = torch.relu(norm @ features @ self.params["conv1.W"] + self.params["conv1.b"])
        branch_b = norm @ g @ self.params["conv2.W"] + self.params["conv2.b"]

        if self.config.fusion == "weighted_sum":
            w = torch.softmax(self.params["fusion.logits"], dim=0)
            return w[0] * branch_a + w[1] * branch_b
        return branch_a + branch_b

    def pair_logits(self, embeddings: torch.Tensor, pairs: Sequence[Tuple[int, int]]) -> torch.Tensor:
        idx = torch.as_tensor(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
        h = torch.cat([embeddings[idx[:, 0]], embeddings[idx[:, 1]]], dim=1)
        hidden = torch.relu(h @ self.params["scorer.W1"] + self.params["scorer.b1"])
        return (hidden @ self.params["scorer.W2"] + self.params["scorer.b2"]).squeeze(-1)


def edge_loss(
    model: Model,
    features: torch.Tensor,
    msg_edges: Sequence[Tuple[int, int]],
    pairs: Sequence[Tuple[int, int]],
    labels: torch.Tensor,
) -> torch.Tensor:
    z = model.embed(features, msg_edges)
    logits = model.pair_logits(z, pairs)
    return torch.nn.functional.binary_cross_entropy_with_logits(logits, labels)


# ---------------------------------------------------------------------------
# Candidate pairs / negative sampling


def candidate_pairs(
    types: Sequence[str], stages: Sequence[int], exclude: Sequence[Tuple[int, int]] = ()
) -> List[Tuple[int, int]]:
    """Ordered index pairs crossing cell type with strictly increasing stage."""
    banned = set(exclude)
    out = []
    n = len(types)
    for i in range(n):
        for j in range(n):
            if i == j or types[i] == types[j] or stages[i] >= stages[j]:
                continue
            if (i, j) in banned:
                continue
            out.append((i, j))
    return out


def sample_negative_edges(
    candidates: Sequence[Tuple[int, int]], count: int, rng: np.random.Generator
) -> List[Tuple[int, int]]:
    if count > len(candidates):
        raise ValidationError(
            f"cannot sample {count} negatives from {len(candidates)} candidate pairs"
        )
    idx = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[i] for i in sorted(idx)]


# ---------------------------------------------------------------------------
# Threshold sweep


def sweep_threshold(
    scores: np.ndarray, labels: np.ndarray, grid: Sequence[float] = DEFAULT_THRESHOLD_GRID
) -> Tuple[float, List[Tuple[float, Optional[float]]]]:
    """Pick the grid threshold maximizing precision of `score > t`.

    Thresholds with no positive prediction have undefined precision and are
    skipped; ties resolve to the largest threshold. Returns the choice and the
    full (threshold, precision-or-None) table.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.size == 0:
        raise ValidationError("scores and labels must be equal-length and non-empty")
    table: List[Tuple[float, Optional[float]]] = []
    best: Optional[Tuple[float, float]] = None
    for thr in sorted(grid):
        preds = scores > thr
        n_pred = int(preds.sum())
        if n_pred == 0:
            table.append((thr, None))
            continue
        precision = float((labels[preds] == 1).sum() / n_pred)
        table.append((thr, precision))
        if best is None or precision >= best[1]:
            best = (thr, precision)
    if best is None:
        raise ValidationError("no threshold in the grid yields any positive prediction")
    return best[0], table


def balanced_accuracy(pos_scores: np.ndarray, neg_scores: np.ndarray, threshold: float) -> float:
    pos_scores = np.asarray(pos_scores, dtype=np.float64)
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    if pos_scores.size == 0 or neg_scores.size == 0:
        raise ValidationError("balanced accuracy needs both positive and negative scores")
    tpr = float((pos_scores > threshold).mean())
    tnr = float((neg_scores <= threshold).mean())
    return 0.5 * (tpr + tnr)


# ---------------------------------------------------------------------------
# Training


def _validate_inputs(features, types, stages, pos_edges, config):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != config.in_dim:
        raise ValidationError(
            f"features must be (n, {config.in_dim}); got {features.shape}"
        )
    if not np.isfinite(features).all():
        raise ValidationError("features contain non-finite values")
    n = features.shape[0]
    if len(types) != n or len(stages) != n:
        raise ValidationError("types/stages must align with feature rows")
    seen = set()
    for u, v in pos_edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edge ({u}, {v}) references a missing node")
        if types[u] == types[v]:
            raise ValidationError(f"edge ({u}, {v}) joins equal cell types")
        if stages[u] >= stages[v]:
            raise ValidationError(f"edge ({u}, {v}) does not advance stage")
        if (u, v) in seen:
            raise ValidationError(f"duplicate edge ({u}, {v})")
        seen.add((u, v))
    return features


def split_edges(
    pos_edges: Sequence[Tuple[int, int]], rng: np.random.Generator
) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]], List[Tuple[int, int]]]:
    """80/10/10 shuffle-split with at least one edge per part."""
    n = len(pos_edges)
    if n < 3:
        raise ValidationError(f"need >= 3 positive edges to split, got {n}")
    order = rng.permutation(n)
    n_val = max(1, int(math.floor(0.1 * n)))
    n_test = max(1, int(math.floor(0.1 * n)))
    n_train = n - n_val - n_test
    shuffled = [pos_edges[i] for i in order]
    return shuffled[:n_train], shuffled[n_train : n_train + n_val], shuffled[n_train + n_val :]


def train(
    features: np.ndarray,
    types: Sequence[str],
    stages: Sequence[int],
    pos_edges: Sequence[Tuple[int, int]],
    config: Optional[ModelConfig] = None,
    seed: int = 0,
    progress: Optional[Callable[[int, int], None]] = None,
) -> Tuple[Model, TrainReport]:
    """Fit the link predictor on observed population edges.

    Message passing during training and evaluation runs over the training
    split of positive edges. Negatives for the training loss are re-sampled
    each epoch; validation and test negatives are fixed at split time so the
    threshold sweep and final metrics are stable.
    """
    config = config or ModelConfig()
    features = _validate_inputs(features, types, stages, pos_edges, config)
    pos_edges = sorted(set(tuple(e) for e in pos_edges))
    torch.set_num_threads(1)
    t0 = time.perf_counter()

    rng = np.random.default_rng(seed)
    train_pos, val_pos, test_pos = split_edges(pos_edges, rng)
    candidates = candidate_pairs(types, stages, exclude=pos_edges)
    need = int(round(config.neg_ratio * len(pos_edges)))
    if len(candidates) < need:
        raise ValidationError(
            f"negative candidate space ({len(candidates)}) smaller than required ({need})"
        )
    val_neg = sample_negative_edges(candidates, max(1, int(round(config.neg_ratio * len(val_pos)))), rng)
    test_neg = sample_negative_edges(candidates, max(1, int(round(config.neg_ratio * len(test_pos)))), rng)

    model = Model(config, seed=seed)
    x = torch.tensor(features, dtype=torch.float64)
    optimizer = torch.optim.AdamW(
        list(model.params.values()), lr=config.lr, weight_decay=config.weight_decay
    )
    msg_edges = train_pos

    train_losses: List[float] = []
    val_losses: List[float] = []
    n_train_neg = max(1, int(round(config.neg_ratio * len(train_pos))))
    for epoch in range(config.epochs):
        negs = sample_negative_edges(candidates, n_train_neg, rng)
        pairs = list(train_pos) + negs
        labels = np.concatenate([np.ones(len(train_pos)), np.zeros(len(negs))])
        order = rng.permutation(len(pairs))
        n_batches = min(config.batches_per_epoch, len(pairs))
        batch_losses = []
        for chunk in np.array_split(order, n_batches):
            if chunk.size == 0:
                continue
            batch_pairs = [pairs[i] for i in chunk]
            batch_labels = torch.tensor(labels[chunk], dtype=torch.float64)
            loss = edge_loss(model, x, msg_edges, batch_pairs, batch_labels)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise StateError(f"non-finite training loss at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch_losses.append(value)
        train_losses.append(float(np.mean(batch_losses)))

        with torch.no_grad():
            val_pairs = list(val_pos) + list(val_neg)
            val_labels = torch.tensor(
                np.concatenate([np.ones(len(val_pos)), np.zeros(len(val_neg))]),
                dtype=torch.float64,
            )
            val_loss = float(edge_loss(model, x, msg_edges, val_pairs, val_labels))
            if not math.isfinite(val_loss):
                raise StateError(f"non-finite validation loss at epoch {epoch}")
            val_losses.append(val_loss)
        if progress is not None:
            progress(epoch + 1, config.epochs)

    with torch.no_grad():
        z = model.embed(x, msg_edges)
        val_scores = torch.sigmoid(
            model.pair_logits(z, list(val_pos) + list(val_neg))
        ).numpy()
        val_labels_np = np.concatenate([np.ones(len(val_pos)), np.zeros(len(val_neg))])
        threshold, table = sweep_threshold(val_scores, val_labels_np, config.threshold_grid)

        val_acc = balanced_accuracy(
            val_scores[: len(val_pos)], val_scores[len(val_pos) :], threshold
        )
        test_scores = torch.sigmoid(
            model.pair_logits(z, list(test_pos) + list(test_neg))
        ).numpy()
        tp_scores = test_scores[: len(test_pos)]
        tn_scores = test_scores[len(test_pos) :]
        test_acc = balanced_accuracy(tp_scores, tn_scores, threshold)
        tp = int((tp_scores > threshold).sum())
        fp = int((tn_scores > threshold).sum())
        test_precision = tp / (tp + fp) if (tp + fp) > 0 else None
        test_recall = float(tp / len(tp_scores))

    report = TrainReport(
        seed=seed,
        epochs=config.epochs,
        n_nodes=features.shape[0],
        n_pos_edges=len(pos_edges),
        n_params=model.n_params,
        train_losses=train_losses,
        val_losses=val_losses,
        threshold_table=table,
        threshold=threshold,
        val_balanced_acc=val_acc,
        test_balanced_acc=test_acc,
        test_precision=test_precision,
        test_recall=test_recall,
        wall_time_s=time.perf_counter() - t0,
    )
    logger.info(
        "trained %d params on %d edges: threshold=%.2f test balanced acc=%.4f",
        model.n_params,
        len(pos_edges),
        threshold,
        test_acc,
    )
    return model, report


# ---------------------------------------------------------------------------
# Prediction


def predict_edges(
    model: Model,
    features: np.ndarray,
    types: Sequence[str],
    stages: Sequence[int],
    node_ids: Sequence[str],
    threshold: float,
) -> List[PredictedEdge]:
    """Score every admissible ordered pair on an edgeless graph.

    Message passing sees self-loops only, so the model transfers to samples
    where no connectivity is known. An edge is emitted when its probability
    strictly exceeds the threshold.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.config.in_dim:
        raise ValidationError(f"features must be (n, {model.config.in_dim})")
    if not (len(types) == len(stages) == len(node_ids) == features.shape[0]):
        raise ValidationError("node metadata must align with feature rows")
    pairs = candidate_pairs(types, stages)
    if not pairs:
        return []
    x = torch.tensor(features, dtype=torch.float64)
    with torch.no_grad():
        z = model.embed(x, [])
        probs = torch.sigmoid(model.pair_logits(z, pairs)).numpy()
    out = [
        PredictedEdge(src=node_ids[i], dst=node_ids[j], probability=float(p))
        for (i, j), p in zip(pairs, probs)
        if p > threshold
    ]
    out.sort(key=lambda e: (e.src, e.dst))
    return out


def score_all_pairs(
    model: Model,
    features: np.ndarray,
    types: Sequence[str],
    stages: Sequence[int],
) -> Tuple[List[Tuple[int, int]], np.ndarray]:
    """All admissible pairs with probabilities, for calibration inspection."""
    pairs = candidate_pairs(types, stages)
    if not pairs:
        return [], np.zeros(0)
    x = torch.tensor(np.asarray(features, dtype=np.float64))
    with torch.no_grad():
        z = model.embed(x, [])
        probs = torch.sigmoid(model.pair_logits(z, pairs)).numpy()
    return pairs, probs


# ---------------------------------------------------------------------------
# Persistence


def save_model(model: Model, path: str, threshold: Optional[float] = None) -> None:
    """One file: a JSON header line, then raw float64 parameter bytes.

    The header pins the architecture, parameter shapes, total count and a
    content hash, so a load can verify it got exactly what was saved.
    """
    names = list(model.params)
    arrays = [model.params[n].detach().numpy() for n in names]
    payload = b"".join(np.ascontiguousarray(a).tobytes() for a in arrays)
    header = {
        "format": _MAGIC,
        "version": 1,
        "config": asdict(model.config),
        "params": [{"name": n, "shape": list(a.shape)} for n, a in zip(names, arrays)],
        "param_count": int(sum(a.size for a in arrays)),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    if threshold is not None:
        header["threshold"] = float(threshold)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_model(path: str) -> Tuple[Model, Optional[float]]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable model header: {exc}") from None
    if header.get("format") != _MAGIC:
        raise FormatError("not a model file")
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise FormatError("model payload hash mismatch")

    cfg_dict = dict(header["config"])
    cfg_dict["threshold_grid"] = tuple(cfg_dict.get("threshold_grid", DEFAULT_THRESHOLD_GRID))
    config = ModelConfig(**cfg_dict)
    model = Model(config, seed=0)

    offset = 0
    count = 0
    for spec_entry in header["params"]:
        name, shape = spec_entry["name"], tuple(spec_entry["shape"])
        if name not in model.params or tuple(model.params[name].shape) != shape:
            raise FormatError(f"unexpected parameter {name!r} with shape {shape}")
        size = int(np.prod(shape)) if shape else 1
        raw = np.frombuffer(payload, dtype=np.float64, count=size, offset=offset)
        offset += size * 8
        count += size
        with torch.no_grad():
            model.params[name].copy_(torch.tensor(raw.reshape(shape), dtype=torch.float64))
    if count != header["param_count"] or offset != len(payload):
        raise FormatError("parameter payload does not match declared count")
    return model, header.get("threshold")
