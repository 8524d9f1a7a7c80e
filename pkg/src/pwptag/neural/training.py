"""Minibatch training loops for the neural models plus gradient checking.

Training is deterministic given a seed: parameter init, batch order, and
dropout masks all draw from one seeded generator. A non-finite epoch loss
aborts with the epoch index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ParameterError, TrainingDivergenceError
from ..features import (
    PAD_ID,
    EmbeddingMatrix,
    SparseVector,
    TokenSequence,
    collate_sequences,
)
from .losses import BCE_SIGMOID, CROSS_ENTROPY_SOFTMAX, MSE_SIGMOID, loss
from .models import (
    CNNModel,
    MLPModel,
    cnn_forward,
    init_cnn,
    init_mlp,
    mlp_forward,
)
from .optim import AdamState, adam_step
from .tensor import Tensor, backward


@dataclass(frozen=True)
class NeuralConfig:
    epochs: int = 20
    learning_rate: float = 1e-3
    batch_size: int = 32
    dropout: float = 0.5
    widths: tuple[int, ...] = (3, 4, 5)
    num_filters: int = 512
    hidden: int = 512
    dtype: str = "float64"

    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes), dtype=np.float64)
    out[np.arange(len(labels)), np.asarray(labels, dtype=np.int64)] = 1.0
    return out


def indicator_matrix(label_sets: Sequence[frozenset[int]], n_classes: int) -> np.ndarray:
    out = np.zeros((len(label_sets), n_classes), dtype=np.float64)
    for i, labels in enumerate(label_sets):
        for c in labels:
            out[i, c] = 1.0
    return out


def densify(vectors: Sequence[SparseVector], n_features: int, dtype=np.float64) -> np.ndarray:
    out = np.zeros((len(vectors), n_features), dtype=dtype)
    for i, vec in enumerate(vectors):
        if vec.nnz:
            out[i, vec.indices] = vec.values
    return out


def _zero_grads(params: list[Tensor]) -> None:
    for p in params:
        p.zero_grad()


def _check_targets(targets: np.ndarray, n: int, n_classes: int) -> None:
    if targets.shape != (n, n_classes):
        raise ParameterError(
            f"targets shape {targets.shape} does not match ({n}, {n_classes})"
        )


def train_cnn(
    sequences: Sequence[TokenSequence],
    targets: np.ndarray,
    embedding: EmbeddingMatrix,
    n_classes: int,
    loss_kind: str,
    config: NeuralConfig,
    seed: int,
) -> tuple[CNNModel, list[float]]:
    """Train a convolutional classifier; returns the model and the
    per-epoch mean training loss trace."""
    targets = np.asarray(targets, dtype=np.float64)
    _check_targets(targets, len(sequences), n_classes)
    rng = np.random.default_rng(seed)
    model = init_cnn(
        embedding,
        n_classes,
        rng,
        widths=config.widths,
        num_filters=config.num_filters,
        dropout_rate=config.dropout,
        dtype=config.np_dtype(),
    )
    params = model.parameters()
    state = AdamState.create(params, learning_rate=config.learning_rate)
    trace: list[float] = []
    n = len(sequences)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            ids, lengths = collate_sequences([sequences[i] for i in batch_idx])
            activations = cnn_forward(model, ids, lengths, train=True, rng=rng)
            batch_loss = loss(loss_kind, activations, targets[batch_idx])
            _zero_grads(params)
            backward(batch_loss)
            if model.trainable_embedding and model.embedding.grad is not None:
                model.embedding.grad[PAD_ID] = 0.0  # PAD row stays pinned to zero
            adam_step(state, params)
            epoch_loss += float(batch_loss.data)
            n_batches += 1
        mean_loss = epoch_loss / max(n_batches, 1)
        if not np.isfinite(mean_loss):
            raise TrainingDivergenceError(
                f"training loss became non-finite at epoch {epoch}", epoch
            )
        trace.append(mean_loss)
    return model, trace


def train_mlp(
    vectors: Sequence[SparseVector],
    targets: np.ndarray,
    n_features: int,
    n_classes: int,
    loss_kind: str,
    config: NeuralConfig,
    seed: int,
) -> tuple[MLPModel, list[float]]:
    targets = np.asarray(targets, dtype=np.float64)
    _check_targets(targets, len(vectors), n_classes)
    rng = np.random.default_rng(seed)
    model = init_mlp(n_features, n_classes, rng, hidden=config.hidden, dtype=config.np_dtype())
    params = model.parameters()
    state = AdamState.create(params, learning_rate=config.learning_rate)
    trace: list[float] = []
    n = len(vectors)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            batch = densify([vectors[i] for i in batch_idx], n_features, config.np_dtype())
            activations = mlp_forward(model, batch)
            batch_loss = loss(loss_kind, activations, targets[batch_idx])
            _zero_grads(params)
            backward(batch_loss)
            adam_step(state, params)
            epoch_loss += float(batch_loss.data)
            n_batches += 1
        mean_loss = epoch_loss / max(n_batches, 1)
        if not np.isfinite(mean_loss):
            raise TrainingDivergenceError(
                f"training loss became non-finite at epoch {epoch}", epoch
            )
        trace.append(mean_loss)
    return model, trace


def cnn_activations(
    model: CNNModel, sequences: Sequence[TokenSequence], batch_size: int = 128
) -> np.ndarray:
    """Eval-mode activations for a list of sequences (dropout disabled)."""
    rows = []
    for start in range(0, len(sequences), batch_size):
        ids, lengths = collate_sequences(list(sequences[start : start + batch_size]))
        rows.append(cnn_forward(model, ids, lengths, train=False).data)
    return np.concatenate(rows, axis=0) if rows else np.empty((0, model.n_classes))


def mlp_activations(
    model: MLPModel, vectors: Sequence[SparseVector], batch_size: int = 256
) -> np.ndarray:
    rows = []
    for start in range(0, len(vectors), batch_size):
        batch = densify(vectors[start : start + batch_size], model.n_features,
                        model.w1.data.dtype)
        rows.append(mlp_forward(model, batch).data)
    return np.concatenate(rows, axis=0) if rows else np.empty((0, model.n_classes))


# ---------------------------------------------------------------------------
# gradient checking


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.linalg.norm(analytic - numeric)
    denom = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(num / denom)


def _numeric_gradient(compute_loss, param: Tensor, h: float) -> np.ndarray:
    grad = np.zeros_like(param.data)
    flat = param.data.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = compute_loss()
        flat[i] = orig - h
        down = compute_loss()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def grad_check(
    kind: str = "cnn",
    loss_kind: str = CROSS_ENTROPY_SOFTMAX,
    seed: int = 0,
    h: float = 1e-5,
) -> float:
    """Compare analytic gradients with central finite differences on a tiny
    random configuration; returns the max per-parameter relative error.

    Dropout is disabled so the loss surface is deterministic; everything
    runs in 64-bit.
    """
    rng = np.random.default_rng(seed)
    n_classes = 4
    if kind == "cnn":
        vocab_size, dim, batch, length = 18, 6, 3, 10
        matrix = rng.standard_normal((vocab_size, dim))
        matrix[PAD_ID] = 0.0
        emb = EmbeddingMatrix(matrix, np.zeros(vocab_size, dtype=bool))
        model = init_cnn(
            emb, n_classes, rng, widths=(2, 3), num_filters=3, dropout_rate=0.0
        )
        ids = rng.integers(2, vocab_size, size=(batch, length))
        lengths = rng.integers(4, length + 1, size=batch)
        for row, n_real in enumerate(lengths):
            ids[row, n_real:] = PAD_ID

        def forward() -> Tensor:
            return cnn_forward(model, ids, lengths, train=False)

    elif kind == "mlp":
        n_features, batch = 9, 5
        model = init_mlp(n_features, n_classes, rng, hidden=7)
        batch_data = rng.standard_normal((batch, n_features))

        def forward() -> Tensor:
            return mlp_forward(model, batch_data)

    else:
        raise ParameterError(f"unknown model kind {kind!r}")

    n_rows = forward().data.shape[0]
    if loss_kind == CROSS_ENTROPY_SOFTMAX:
        targets = one_hot(rng.integers(0, n_classes, size=n_rows), n_classes)
    else:
        targets = (rng.random((n_rows, n_classes)) < 0.5).astype(np.float64)

    params = model.parameters()
    _zero_grads(params)
    total = loss(loss_kind, forward(), targets)
    backward(total)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    def compute_loss() -> float:
        return float(loss(loss_kind, forward(), targets).data)

    worst = 0.0
    for p, ga in zip(params, analytic):
        gn = _numeric_gradient(compute_loss, p, h)
        worst = max(worst, _relative_error(ga, gn))
    return worst
