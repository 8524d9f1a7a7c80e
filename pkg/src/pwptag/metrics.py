"""Evaluation metrics, confusion matrices, and category-restricted scores.

Conventions: multiclass predictions are class indices, multilabel
predictions are frozensets of label indices. Per-class F1 with zero
support and zero predictions is defined as 0. All stored scores live in
[0, 1]; presentation layers scale to percentages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError

MULTICLASS = "multiclass"
MULTILABEL = "multilabel"

#: Tags describing what kind of problem a PWP is.
PROBLEM_CATEGORY_TAGS = frozenset({
    "probabilities",
    "geometry",
    "combinatorics",
    "number theory",
    "strings",
    "trees",
    "graphs",
    "math",
    "data structures",
})

#: Tags describing which technique solves a PWP.
SOLUTION_CATEGORY_TAGS = frozenset({
    "dsu",
    "binary search",
    "dfs and similar",
    "constructive algorithms",
    "brute force",
    "greedy",
    "dp",
    "bitmask",
    "two pointers",
    "sortings",
    "implementation",
})


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def accuracy(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    if len(y_true) != len(y_pred):
        raise ParameterError("true/pred length mismatch")
    if not y_true:
        raise ParameterError("cannot score an empty prediction list")
    return sum(t == p for t, p in zip(y_true, y_pred)) / len(y_true)


def _per_class_counts(y_true, y_pred, n_classes):
    tp = [0] * n_classes
    fp = [0] * n_classes
    fn = [0] * n_classes
    for t, p in zip(y_true, y_pred):
        if t == p:
            tp[t] += 1
        else:
            fn[t] += 1
            fp[p] += 1
    return tp, fp, fn


def f1_macro(
    y_true: Sequence[int],
    y_pred: Sequence[int],
    n_classes: int,
    weighted: bool = False,
) -> float:
    """Mean per-class F1 over all `n_classes` classes; with `weighted`,
    classes are weighted by their true-label support."""
    if len(y_true) != len(y_pred):
        raise ParameterError("true/pred length mismatch")
    if not y_true:
        raise ParameterError("cannot score an empty prediction list")
    tp, fp, fn = _per_class_counts(y_true, y_pred, n_classes)
    scores = [_f1(tp[c], fp[c], fn[c]) for c in range(n_classes)]
    if not weighted:
        return sum(scores) / n_classes
    supports = [tp[c] + fn[c] for c in range(n_classes)]
    total = sum(supports)
    return sum(s * f for s, f in zip(supports, scores)) / total


def f1_micro_multilabel(
    true_sets: Sequence[frozenset[int]], pred_sets: Sequence[frozenset[int]]
) -> float:
    """F1 of TP/FP/FN pooled across all labels and items."""
    if len(true_sets) != len(pred_sets):
        raise ParameterError("true/pred length mismatch")
    tp = fp = fn = 0
    for t, p in zip(true_sets, pred_sets):
        tp += len(t & p)
        fp += len(p - t)
        fn += len(t - p)
    return _f1(tp, fp, fn)


def f1_macro_multilabel(
    true_sets: Sequence[frozenset[int]],
    pred_sets: Sequence[frozenset[int]],
    n_labels: int,
) -> float:
    """Per-label F1 averaged uniformly over the whole catalog."""
    if len(true_sets) != len(pred_sets):
        raise ParameterError("true/pred length mismatch")
    if n_labels < 1:
        raise ParameterError("n_labels must be positive")
    total = 0.0
    for label in range(n_labels):
        tp = fp = fn = 0
        for t, p in zip(true_sets, pred_sets):
            if label in t and label in p:
                tp += 1
            elif label in p:
                fp += 1
            elif label in t:
                fn += 1
        total += _f1(tp, fp, fn)
    return total / n_labels


def hamming_loss(
    true_sets: Sequence[frozenset[int]],
    pred_sets: Sequence[frozenset[int]],
    n_labels: int,
) -> float:
    """Fraction of wrong label slots: symmetric difference over N * L."""
    if len(true_sets) != len(pred_sets):
        raise ParameterError("true/pred length mismatch")
    if n_labels < 1:
        raise ParameterError("n_labels must be positive")
    if not true_sets:
        return 0.0
    wrong = sum(len(t ^ p) for t, p in zip(true_sets, pred_sets))
    return wrong / (len(true_sets) * n_labels)


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns are predicted classes."""

    counts: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if self.counts.shape != (n, n):
            raise ParameterError("confusion matrix shape must match labels")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def row_normalized(self) -> np.ndarray:
        sums = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(sums > 0, self.counts / sums, 0.0)
        return out

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise ParameterError("cannot merge confusion matrices over different labels")
        return ConfusionMatrix(self.counts + other.counts, self.labels)

    def to_text(self) -> str:
        width = max(len(l) for l in self.labels)
        width = max(width, 6)
        header = " " * (width + 1) + " ".join(f"{l[:width]:>{width}}" for l in self.labels)
        lines = [header]
        for i, label in enumerate(self.labels):
            row = " ".join(f"{int(c):>{width}}" for c in self.counts[i])
            lines.append(f"{label[:width]:>{width}} {row}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionMatrix":
        return cls(np.asarray(data["counts"], dtype=np.int64), tuple(data["labels"]))


def confusion_matrix(
    y_true: Sequence[int], y_pred: Sequence[int], labels: Sequence[str]
) -> ConfusionMatrix:
    n = len(labels)
    counts = np.zeros((n, n), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        counts[t, p] += 1
    return ConfusionMatrix(counts, tuple(labels))


@dataclass
class CategoryScores:
    """Scores restricted to one tag category; None values mean the
    category had no scorable items (undefined, distinct from 0)."""

    micro: float | None
    macro: float | None
    weighted: float | None
    n_items: int

    def defined(self) -> bool:
        return self.n_items > 0

    def to_dict(self) -> dict:
        return {
            "micro": self.micro,
            "macro": self.macro,
            "weighted": self.weighted,
            "n_items": self.n_items,
        }


def category_scores(
    y_true: Sequence,
    y_pred: Sequence,
    category: Iterable[str],
    catalog: Sequence[str],
    kind: str,
) -> CategoryScores:
    """Score predictions restricted to a tag category.

    Multilabel: true/pred sets are intersected with the category and
    items whose restricted true set is empty are dropped. Multiclass:
    only items whose true class is in the category are scored (predictions
    outside the category count as errors).
    """
    cat = set(category)
    if not cat:
        raise ParameterError("category must be non-empty")
    missing = cat - set(catalog)
    if missing:
        raise ParameterError(f"category tags not in catalog: {sorted(missing)}")
    index_of = {tag: i for i, tag in enumerate(catalog)}
    cat_ids = frozenset(index_of[t] for t in cat)

    if kind == MULTICLASS:
        keep = [(t, p) for t, p in zip(y_true, y_pred) if t in cat_ids]
        if not keep:
            return CategoryScores(None, None, None, 0)
        kt = [t for t, _ in keep]
        kp = [p for _, p in keep]
        micro = accuracy(kt, kp)
        # per-class F1 over the category classes only
        scores = {}
        supports = {}
        for c in sorted(cat_ids):
            tp = sum(1 for t, p in keep if t == c and p == c)
            fp = sum(1 for t, p in keep if t != c and p == c)
            fn = sum(1 for t, p in keep if t == c and p != c)
            scores[c] = _f1(tp, fp, fn)
            supports[c] = tp + fn
        macro = sum(scores.values()) / len(scores)
        total = sum(supports.values())
        weighted = sum(supports[c] * scores[c] for c in scores) / total
        return CategoryScores(micro, macro, weighted, len(keep))

    if kind != MULTILABEL:
        raise ParameterError(f"unknown dataset kind {kind!r}")
    restricted = [
        (t & cat_ids, p & cat_ids) for t, p in zip(y_true, y_pred)
    ]
    kept = [(t, p) for t, p in restricted if t]
    if not kept:
        return CategoryScores(None, None, None, 0)
    kt = [t for t, _ in kept]
    kp = [p for _, p in kept]
    tp = fp = fn = 0
    for t, p in zip(kt, kp):
        tp += len(t & p)
        fp += len(p - t)
        fn += len(t - p)
    micro = _f1(tp, fp, fn)
    per_label = []
    for label in sorted(cat_ids):
        ltp = sum(1 for t, p in zip(kt, kp) if label in t and label in p)
        lfp = sum(1 for t, p in zip(kt, kp) if label not in t and label in p)
        lfn = sum(1 for t, p in zip(kt, kp) if label in t and label not in p)
        per_label.append(_f1(ltp, lfp, lfn))
    macro = sum(per_label) / len(per_label)
    return CategoryScores(micro, macro, None, len(kept))


MULTICLASS_METRICS = ("accuracy", "f1_macro", "f1_weighted")
MULTILABEL_METRICS = ("hamming_loss", "f1_micro", "f1_macro")


def score_multiclass(y_true, y_pred, n_classes: int) -> dict[str, float]:
    return {
        "accuracy": accuracy(y_true, y_pred),
        "f1_macro": f1_macro(y_true, y_pred, n_classes),
        "f1_weighted": f1_macro(y_true, y_pred, n_classes, weighted=True),
    }


def score_multilabel(true_sets, pred_sets, n_labels: int) -> dict[str, float]:
    return {
        "hamming_loss": hamming_loss(true_sets, pred_sets, n_labels),
        "f1_micro": f1_micro_multilabel(true_sets, pred_sets),
        "f1_macro": f1_macro_multilabel(true_sets, pred_sets, n_labels),
    }


@dataclass
class MetricsReport:
    """Per-fold and mean metric values for one evaluation run."""

    kind: str
    per_fold: list[dict[str, float]]
    n_items: list[int]
    baseline: bool = False
    confusion: ConfusionMatrix | None = None
    categories: dict[str, CategoryScores] | None = None
    mean: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.mean and self.per_fold:
            names = self.per_fold[0].keys()
            self.mean = {
                name: sum(fold[name] for fold in self.per_fold) / len(self.per_fold)
                for name in names
            }

    @property
    def folds(self) -> int:
        return len(self.per_fold)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "baseline": self.baseline,
            "per_fold": self.per_fold,
            "n_items": self.n_items,
            "mean": self.mean,
        }
        if self.confusion is not None:
            out["confusion"] = self.confusion.to_dict()
        if self.categories is not None:
            out["categories"] = {k: v.to_dict() for k, v in self.categories.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        confusion = None
        if "confusion" in data:
            confusion = ConfusionMatrix.from_dict(data["confusion"])
        categories = None
        if "categories" in data:
            categories = {
                k: CategoryScores(**v) for k, v in data["categories"].items()
            }
        return cls(
            kind=data["kind"],
            per_fold=data["per_fold"],
            n_items=data["n_items"],
            baseline=data.get("baseline", False),
            confusion=confusion,
            categories=categories,
            mean=data["mean"],
        )
