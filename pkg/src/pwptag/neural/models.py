"""The two network architectures: a convolutional sentence classifier and
a one-hidden-layer perceptron.

The convolutional model embeds token ids, runs one bank of filters per
width, rectifies, takes a global max over positions (masked so padding
beyond a sequence's real tokens can never change the output),
concatenates the pooled features, applies dropout while training, and
maps through a fully-connected layer to per-class linear activations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..features import PAD_ID, EmbeddingMatrix
from .optim import xavier_init
from .tensor import (
    Tensor,
    affine,
    concat,
    conv1d_bank,
    dropout,
    embedding_lookup,
    masked_max_pool,
    relu,
)

DEFAULT_FILTER_WIDTHS = (3, 4, 5)
DEFAULT_NUM_FILTERS = 512


@dataclass
class CNNModel:
    embedding: Tensor  # (vocab, dim); PAD row pinned to zero
    conv_weights: list[Tensor]  # per width: (filters, width, dim)
    conv_biases: list[Tensor]  # per width: (filters,)
    fc_weight: Tensor  # (len(widths) * filters, n_classes)
    fc_bias: Tensor  # (n_classes,)
    widths: tuple[int, ...]
    dropout_rate: float
    trainable_embedding: bool
    pretrained_rows: np.ndarray | None = None  # provenance mask, informational

    @property
    def n_classes(self) -> int:
        return int(self.fc_bias.data.shape[0])

    @property
    def num_filters(self) -> int:
        return int(self.conv_weights[0].data.shape[0])

    @property
    def max_width(self) -> int:
        return max(self.widths)

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        if self.trainable_embedding:
            params.append(self.embedding)
        params.extend(self.conv_weights)
        params.extend(self.conv_biases)
        params.extend([self.fc_weight, self.fc_bias])
        return params


def init_cnn(
    embedding: EmbeddingMatrix,
    n_classes: int,
    rng: np.random.Generator,
    widths: tuple[int, ...] = DEFAULT_FILTER_WIDTHS,
    num_filters: int = DEFAULT_NUM_FILTERS,
    dropout_rate: float = 0.5,
    trainable_embedding: bool = True,
    dtype=np.float64,
) -> CNNModel:
    """Build a convolutional classifier with Xavier-initialized filters and
    a zeroed fully-connected bias; the embedding table is copied in."""
    if n_classes < 2:
        raise ParameterError(f"need at least 2 classes, got {n_classes}")
    if not widths:
        raise ParameterError("need at least one filter width")
    table = embedding.matrix.astype(dtype).copy()
    table[PAD_ID] = 0.0
    emb = Tensor(table, requires_grad=trainable_embedding)
    dim = embedding.dim
    conv_w = [xavier_init((num_filters, w, dim), rng, dtype) for w in widths]
    conv_b = [Tensor(np.zeros(num_filters, dtype=dtype), requires_grad=True) for _ in widths]
    fc_w = xavier_init((len(widths) * num_filters, n_classes), rng, dtype)
    fc_b = Tensor(np.zeros(n_classes, dtype=dtype), requires_grad=True)
    return CNNModel(
        embedding=emb,
        conv_weights=conv_w,
        conv_biases=conv_b,
        fc_weight=fc_w,
        fc_bias=fc_b,
        widths=tuple(widths),
        dropout_rate=dropout_rate,
        trainable_embedding=trainable_embedding,
        pretrained_rows=embedding.pretrained.copy(),
    )


def cnn_forward(
    model: CNNModel,
    ids: np.ndarray,
    lengths: np.ndarray,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Per-class linear activations for a batch of padded id sequences.

    `ids` is (B, L) with L at least the widest filter; `lengths` holds the
    real token count per row. Returns a (B, n_classes) tensor of
    pre-softmax/pre-sigmoid activations.
    """
    ids = np.asarray(ids, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if ids.ndim != 2:
        raise ParameterError("ids must be a (batch, length) array")
    B, L = ids.shape
    if L < model.max_width:
        raise ParameterError(
            f"sequence length {L} shorter than the widest filter {model.max_width}"
        )
    if train and model.dropout_rate > 0 and rng is None:
        raise ParameterError("training-mode forward needs an rng for dropout")
    embedded = embedding_lookup(model.embedding, ids)  # (B, L, d)
    pooled = []
    for w, weight, bias in zip(model.widths, model.conv_weights, model.conv_biases):
        conv = relu(conv1d_bank(embedded, weight, bias))  # (B, T, F)
        T = L - w + 1
        # windows that overlap at least one real token; always >= 1
        valid = np.clip(lengths, 1, T)
        pooled.append(masked_max_pool(conv, valid))  # (B, F)
    features = concat(pooled, axis=1)  # (B, widths*F)
    features = dropout(features, model.dropout_rate, rng, train)
    return affine(features, model.fc_weight, model.fc_bias)


@dataclass
class MLPModel:
    w1: Tensor  # (n_features, hidden)
    b1: Tensor
    w2: Tensor  # (hidden, n_classes)
    b2: Tensor

    @property
    def n_features(self) -> int:
        return int(self.w1.data.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.b2.data.shape[0])

    def parameters(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_mlp(
    n_features: int,
    n_classes: int,
    rng: np.random.Generator,
    hidden: int = 512,
    dtype=np.float64,
) -> MLPModel:
    if n_features < 1 or hidden < 1 or n_classes < 2:
        raise ParameterError("invalid MLP dimensions")
    return MLPModel(
        w1=xavier_init((n_features, hidden), rng, dtype),
        b1=Tensor(np.zeros(hidden, dtype=dtype), requires_grad=True),
        w2=xavier_init((hidden, n_classes), rng, dtype),
        b2=Tensor(np.zeros(n_classes, dtype=dtype), requires_grad=True),
    )


def mlp_forward(model: MLPModel, batch: np.ndarray) -> Tensor:
    batch = np.asarray(batch, dtype=model.w1.data.dtype)
    if batch.ndim != 2 or batch.shape[1] != model.n_features:
        raise ParameterError(
            f"batch shape {batch.shape} does not match input dim {model.n_features}"
        )
    hidden = relu(affine(Tensor(batch), model.w1, model.b1))
    return affine(hidden, model.w2, model.b2)


def decode_multiclass(activations: np.ndarray) -> list[int]:
    """Argmax per row; ties resolve to the lowest class index."""
    return [int(i) for i in np.argmax(activations, axis=1)]


def decode_multilabel(activations: np.ndarray) -> list[frozenset[int]]:
    """Labels with sigmoid activation above 0.5, i.e. positive linear
    activation; rows with no positive label fall back to their argmax."""
    out = []
    for row in np.asarray(activations):
        fired = np.flatnonzero(row > 0)
        if fired.size:
            out.append(frozenset(int(i) for i in fired))
        else:
            out.append(frozenset({int(np.argmax(row))}))
    return out
