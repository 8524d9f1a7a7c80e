"""Multinomial naive Bayes and linear max-margin classifiers.

Both families operate on sparse n-gram count (or TF-IDF) vectors. The
multilabel variants follow the one-vs-rest reduction: one binary
classifier per class, with that class as positives and everything else as
negatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .features import SparseVector

MULTICLASS_OVR = "multiclass_ovr"
MULTILABEL_OVR = "multilabel_ovr"


@dataclass
class NaiveBayesModel:
    """Multinomial NB: per-class log priors and feature log likelihoods.

    log_prior_c      = ln(N_c / N)
    log_likelihood_ct = ln((count_ct + alpha) / (sum_t count_ct + alpha * V))
    """

    class_log_prior: np.ndarray  # (C,)
    feature_log_prob: np.ndarray  # (C, V)
    alpha: float

    @property
    def n_classes(self) -> int:
        return int(self.class_log_prior.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.feature_log_prob.shape[1])


def train_mnb(
    vectors: Sequence[SparseVector],
    labels: Sequence[int],
    n_classes: int,
    n_features: int,
    alpha: float = 1.0,
) -> NaiveBayesModel:
    if alpha <= 0:
        raise ParameterError(f"smoothing alpha must be > 0, got {alpha}")
    if len(vectors) != len(labels):
        raise ParameterError("vectors/labels length mismatch")
    class_counts = np.zeros(n_classes, dtype=np.int64)
    feature_counts = np.zeros((n_classes, n_features), dtype=np.float64)
    for vec, label in zip(vectors, labels):
        class_counts[label] += 1
        if vec.nnz:
            np.add.at(feature_counts[label], vec.indices, vec.values)
    for c in range(n_classes):
        if class_counts[c] == 0:
            raise ParameterError(f"class {c} has no training documents")
    log_prior = np.log(class_counts / class_counts.sum())
    totals = feature_counts.sum(axis=1, keepdims=True)
    log_prob = np.log(feature_counts + alpha) - np.log(totals + alpha * n_features)
    return NaiveBayesModel(log_prior, log_prob, alpha)


def predict_mnb_scores(model: NaiveBayesModel, vector: SparseVector) -> np.ndarray:
    """Per-class log-posterior scores (up to the shared evidence term)."""
    if vector.nnz and int(vector.indices[-1]) >= model.n_features:
        raise ParameterError("vector does not match the model feature space")
    scores = model.class_log_prior.copy()
    if vector.nnz:
        scores = scores + model.feature_log_prob[:, vector.indices] @ vector.values
    return scores


def predict_mnb(model: NaiveBayesModel, vector: SparseVector) -> int:
    # ties resolve to the lowest class index (argmax picks the first max)
    return int(np.argmax(predict_mnb_scores(model, vector)))


@dataclass
class BinaryRelevanceNB:
    """One binary MNB per class; a class fires when its positive
    log-posterior beats the negative one."""

    models: list[NaiveBayesModel]  # each with classes [negative, positive]
    alpha: float

    @property
    def n_classes(self) -> int:
        return len(self.models)


def train_mnb_ovr(
    vectors: Sequence[SparseVector],
    label_sets: Sequence[frozenset[int]],
    n_classes: int,
    n_features: int,
    alpha: float = 1.0,
) -> BinaryRelevanceNB:
    models = []
    for c in range(n_classes):
        binary = [1 if c in labels else 0 for labels in label_sets]
        if not any(binary):
            raise ParameterError(f"class {c} has no positive documents")
        if all(binary):
            raise ParameterError(f"class {c} has no negative documents")
        models.append(train_mnb(vectors, binary, 2, n_features, alpha))
    return BinaryRelevanceNB(models, alpha)


def mnb_ovr_margins(br: BinaryRelevanceNB, vector: SparseVector) -> np.ndarray:
    """Positive-minus-negative log-posterior per class."""
    out = np.empty(br.n_classes, dtype=np.float64)
    for c, model in enumerate(br.models):
        scores = predict_mnb_scores(model, vector)
        out[c] = scores[1] - scores[0]
    return out


def decode_mnb_ovr(br: BinaryRelevanceNB, vector: SparseVector) -> frozenset[int]:
    margins = mnb_ovr_margins(br, vector)
    fired = frozenset(int(i) for i in np.flatnonzero(margins > 0))
    if fired:
        return fired
    return frozenset({int(np.argmax(margins))})


@dataclass
class LinearClassifier:
    """Per-class hyperplanes trained one-vs-rest with hinge loss."""

    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)
    reg: float
    trained_as: str  # MULTICLASS_OVR or MULTILABEL_OVR

    @property
    def n_classes(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1])


def train_binary_hinge(
    vectors: Sequence[SparseVector],
    y: Sequence[int],
    n_features: int,
    reg: float,
    epochs: int,
    seed: int,
) -> tuple[np.ndarray, float]:
    """Seeded stochastic subgradient descent on the L2-regularized hinge
    objective (reg/2)*||w||^2 + mean hinge; the bias is unregularized.

    Step sizes follow the 1/(reg * t) schedule; the weight vector is kept
    as scale * v so the regularization shrink is O(1) per step.
    """
    if reg <= 0:
        raise ParameterError(f"regularization strength must be > 0, got {reg}")
    if epochs < 1:
        raise ParameterError(f"epochs must be >= 1, got {epochs}")
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ParameterError("binary targets must be +1/-1")
    rng = np.random.default_rng(seed)
    v = np.zeros(n_features, dtype=np.float64)
    scale = 1.0
    bias = 0.0
    t = 1
    n = len(vectors)
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (reg * t)
            vec = vectors[i]
            margin = y[i] * (scale * float(v[vec.indices] @ vec.values) + bias)
            scale *= 1.0 - eta * reg  # = 1 - 1/t, never zero for t >= 2
            if margin < 1.0:
                v[vec.indices] += (eta * y[i] / scale) * vec.values
                bias += eta * y[i]
            if scale < 1e-9:
                v *= scale
                scale = 1.0
    return scale * v, bias


def train_linear_ovr(
    vectors: Sequence[SparseVector],
    labels: Sequence[int] | Sequence[frozenset[int]],
    n_classes: int,
    n_features: int,
    reg: float = 1e-4,
    epochs: int = 10,
    seed: int = 0,
    multilabel: bool = False,
) -> LinearClassifier:
    """Train one binary hinge classifier per class.

    Class c's training stream is seeded with (seed, c), so training a
    single class in isolation reproduces its one-vs-rest weights exactly.
    """
    if multilabel:
        positive = [np.array([c in s for s in labels]) for c in range(n_classes)]
    else:
        arr = np.asarray(labels)
        positive = [arr == c for c in range(n_classes)]
    weights = np.zeros((n_classes, n_features), dtype=np.float64)
    bias = np.zeros(n_classes, dtype=np.float64)
    for c in range(n_classes):
        pos = positive[c]
        if not pos.any():
            raise ParameterError(f"class {c} has no positive examples")
        if pos.all():
            raise ParameterError(f"class {c} has no negative examples")
        y = np.where(pos, 1.0, -1.0)
        weights[c], bias[c] = train_binary_hinge(
            vectors, y, n_features, reg, epochs, class_seed(seed, c)
        )
    return LinearClassifier(
        weights, bias, reg, MULTILABEL_OVR if multilabel else MULTICLASS_OVR
    )


def class_seed(seed: int, class_index: int) -> int:
    from ._util import mix_seed

    return mix_seed(seed, "ovr-class", class_index)


def decision_values(clf: LinearClassifier, vector: SparseVector) -> np.ndarray:
    if vector.nnz and int(vector.indices[-1]) >= clf.n_features:
        raise ParameterError("vector does not match the classifier feature space")
    values = clf.bias.copy()
    if vector.nnz:
        values = values + clf.weights[:, vector.indices] @ vector.values
    return values


def decode_linear(clf: LinearClassifier, vector: SparseVector) -> int | frozenset[int]:
    """Multiclass: argmax decision value (ties to the lowest index).
    Multilabel: all classes with positive decision value, falling back to
    the single argmax class when none is positive."""
    values = decision_values(clf, vector)
    if clf.trained_as == MULTICLASS_OVR:
        return int(np.argmax(values))
    fired = frozenset(int(i) for i in np.flatnonzero(values > 0))
    if fired:
        return fired
    return frozenset({int(np.argmax(values))})
