"""Dataset construction: raw filtering, top-k tag restriction, balanced
sampling, statistics, folds, label shuffling, and fraction subsets.

All builders are pure functions of (input, seed); outputs are immutable
and safe to share across workers.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import corpus as corpus_mod
from ._util import atomic_write_json, read_json, round_half_up, sha256_hex
from .corpus import Problem, full_text, parse_corpus, render_record, write_corpus
from .errors import CorpusFormatError, ParameterError
from .features import tokenize

#: Default tag names that mark a problem as non-algorithmic in raw dumps.
DEFAULT_NON_ALGORITHMIC = frozenset({"*special", "*special problem"})

DATASET_FORMAT_VERSION = 1


class DatasetKind(str, Enum):
    MULTICLASS = "multiclass"
    MULTILABEL = "multilabel"


@dataclass(frozen=True)
class TagCatalog:
    """Ordered tag list; order is descending corpus frequency with
    lexicographic tie-breaks."""

    tags: tuple[str, ...]
    _index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(set(self.tags)) != len(self.tags):
            raise ParameterError("catalog tags must be unique")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tags)})

    def __len__(self) -> int:
        return len(self.tags)

    def __contains__(self, tag: str) -> bool:
        return tag in self._index

    def index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise ParameterError(f"tag {tag!r} is not in the catalog") from None

    def top(self, k: int) -> "TagCatalog":
        if not 1 <= k <= len(self.tags):
            raise ParameterError(f"k must be in [1, {len(self.tags)}], got {k}")
        return TagCatalog(self.tags[:k])


def tag_frequencies(problems: Iterable[Problem]) -> Counter:
    counts: Counter = Counter()
    for p in problems:
        counts.update(p.tags)
    return counts


def catalog_from_frequencies(counts: Counter, k: int | None = None) -> TagCatalog:
    ordered = sorted(counts, key=lambda tag: (-counts[tag], tag))
    catalog = TagCatalog(tuple(ordered))
    return catalog if k is None else catalog.top(k)


@dataclass(frozen=True)
class LabeledDataset:
    """Multiclass or multilabel view over problems with a fixed catalog.

    `items` pairs each problem id with its label set (a subset of the
    catalog); `problems` maps ids to the underlying records.
    """

    kind: DatasetKind
    catalog: TagCatalog
    items: tuple[tuple[str, frozenset[str]], ...]
    problems: dict[str, Problem] = field(repr=False)

    def __post_init__(self):
        seen: set[str] = set()
        for pid, labels in self.items:
            if pid in seen:
                raise ParameterError(f"duplicate item id {pid!r}")
            seen.add(pid)
            if not labels:
                raise ParameterError(f"item {pid!r} has an empty label set")
            if self.kind is DatasetKind.MULTICLASS and len(labels) != 1:
                raise ParameterError(f"multiclass item {pid!r} has {len(labels)} labels")
            for tag in labels:
                if tag not in self.catalog:
                    raise ParameterError(f"item {pid!r} labelled with unknown tag {tag!r}")
            if pid not in self.problems:
                raise ParameterError(f"item {pid!r} has no problem record")

    @property
    def size(self) -> int:
        return len(self.items)

    @property
    def n_classes(self) -> int:
        return len(self.catalog)

    def ids(self) -> list[str]:
        return [pid for pid, _ in self.items]

    def label_indices(self, labels: frozenset[str]) -> frozenset[int]:
        return frozenset(self.catalog.index(t) for t in labels)

    def class_counts(self) -> Counter:
        counts: Counter = Counter()
        for _, labels in self.items:
            counts.update(labels)
        return counts


def filter_raw(
    problems: Sequence[Problem],
    non_algorithmic: Iterable[str] = DEFAULT_NON_ALGORITHMIC,
) -> list[Problem]:
    """Basic raw-dump cleanup.

    Strips non-algorithmic tag names from every problem, then drops
    problems left tagless and problems whose statement is empty
    (incompletely extracted records). Never fails.
    """
    drop = frozenset(non_algorithmic)
    kept: list[Problem] = []
    for p in problems:
        if not p.statement.strip():
            continue
        tags = p.tags - drop
        if not tags:
            continue
        kept.append(p if tags == p.tags else replace(p, tags=tags))
    return kept


def build_multilabel(problems: Sequence[Problem], k: int) -> LabeledDataset:
    """Restrict a corpus to its top-k tags.

    The catalog is the k most frequent tags; each problem keeps the
    intersection of its tags with the catalog and problems left without
    labels are dropped.
    """
    counts = tag_frequencies(problems)
    if k < 1 or k > len(counts):
        raise ParameterError(
            f"k must be in [1, {len(counts)}] (distinct tags), got {k}"
        )
    catalog = catalog_from_frequencies(counts, k)
    allowed = frozenset(catalog.tags)
    items = []
    kept: dict[str, Problem] = {}
    for p in problems:
        labels = p.tags & allowed
        if labels:
            items.append((p.id, frozenset(labels)))
            kept[p.id] = p
    return LabeledDataset(DatasetKind.MULTILABEL, catalog, tuple(items), kept)


def multiclass_from_multilabel(dataset: LabeledDataset, k: int) -> LabeledDataset:
    """Single-tag restriction of a multilabel dataset.

    Keeps the items whose label set (already intersected with the source
    catalog) has exactly one tag, with that tag among the first k catalog
    entries.
    """
    if dataset.kind is not DatasetKind.MULTILABEL:
        raise ParameterError("source dataset must be multilabel")
    catalog = dataset.catalog.top(k)
    items = []
    kept: dict[str, Problem] = {}
    for pid, labels in dataset.items:
        if len(labels) == 1 and next(iter(labels)) in catalog:
            items.append((pid, labels))
            kept[pid] = dataset.problems[pid]
    return LabeledDataset(DatasetKind.MULTICLASS, catalog, tuple(items), kept)


def build_multiclass(
    problems: Sequence[Problem], k: int, pool_k: int | None = None
) -> LabeledDataset:
    """Build a multiclass dataset of single-tag problems.

    Tag sets are first intersected with the top-`pool_k` catalog (all
    distinct tags when None); problems single-tagged in that space whose
    tag falls in the top-k are kept. The canonical pipeline uses
    pool_k=20 with k=10.
    """
    counts = tag_frequencies(problems)
    pool = build_multilabel(problems, pool_k if pool_k is not None else len(counts))
    return multiclass_from_multilabel(pool, k)


def build_balanced(
    dataset: LabeledDataset, k: int, per_class: int, seed: int
) -> LabeledDataset:
    """Uniform-prior subset of a multiclass dataset.

    Takes the k most frequent classes and samples `per_class` problems
    from each without replacement, deterministically for a given seed.
    """
    if dataset.kind is not DatasetKind.MULTICLASS:
        raise ParameterError("balanced sampling needs a multiclass dataset")
    if per_class < 1:
        raise ParameterError(f"per_class must be positive, got {per_class}")
    counts = dataset.class_counts()
    ordered = sorted(counts, key=lambda tag: (-counts[tag], tag))
    if k < 1 or k > len(ordered):
        raise ParameterError(f"k must be in [1, {len(ordered)}] populated classes, got {k}")
    classes = ordered[:k]
    rng = np.random.default_rng(seed)
    chosen: set[str] = set()
    for tag in classes:
        candidates = [pid for pid, labels in dataset.items if tag in labels]
        if len(candidates) < per_class:
            raise ParameterError(
                f"class {tag!r} has {len(candidates)} items, need {per_class}"
            )
        picked = rng.permutation(len(candidates))[:per_class]
        chosen.update(candidates[i] for i in picked)
    items = tuple(
        (pid, labels) for pid, labels in dataset.items if pid in chosen
    )
    kept = {pid: dataset.problems[pid] for pid, _ in items}
    return LabeledDataset(DatasetKind.MULTICLASS, TagCatalog(tuple(classes)), items, kept)


@dataclass(frozen=True)
class DatasetStats:
    size: int
    vocab_size: int
    n_classes: int
    avg_words: float
    label_cardinality: float
    label_density: float
    label_subsets: int
    class_histogram: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "vocab_size": self.vocab_size,
            "n_classes": self.n_classes,
            "avg_words": self.avg_words,
            "label_cardinality": self.label_cardinality,
            "label_density": self.label_density,
            "label_subsets": self.label_subsets,
            "class_histogram": dict(self.class_histogram),
        }


def dataset_stats(
    dataset: LabeledDataset,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> DatasetStats:
    """Summary statistics over the full problem texts of a dataset."""
    if dataset.size == 0:
        raise ParameterError("cannot compute statistics of an empty dataset")
    vocab: set[str] = set()
    total_tokens = 0
    for pid, _ in dataset.items:
        tokens = tokenizer(full_text(dataset.problems[pid]).text)
        vocab.update(tokens)
        total_tokens += len(tokens)
    cardinality = sum(len(labels) for _, labels in dataset.items) / dataset.size
    subsets = len({labels for _, labels in dataset.items})
    counts = dataset.class_counts()
    histogram = {tag: counts.get(tag, 0) / dataset.size for tag in dataset.catalog.tags}
    return DatasetStats(
        size=dataset.size,
        vocab_size=len(vocab),
        n_classes=dataset.n_classes,
        avg_words=total_tokens / dataset.size,
        label_cardinality=cardinality,
        label_density=cardinality / dataset.n_classes,
        label_subsets=subsets,
        class_histogram=histogram,
    )


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every item id to one of k folds; fold sizes differ by
    at most one (per class for stratified multiclass plans)."""

    k: int
    assignment: dict[str, int]

    def test_ids(self, dataset: LabeledDataset, fold: int) -> list[str]:
        return [pid for pid, _ in dataset.items if self.assignment[pid] == fold]

    def train_ids(self, dataset: LabeledDataset, fold: int) -> list[str]:
        return [pid for pid, _ in dataset.items if self.assignment[pid] != fold]


def kfold_split(dataset: LabeledDataset, k: int, seed: int) -> FoldPlan:
    """Deterministic k-fold partition; multiclass datasets are stratified
    per class."""
    if k < 2:
        raise ParameterError(f"fold count must be >= 2, got {k}")
    if k > dataset.size:
        raise ParameterError(f"fold count {k} exceeds dataset size {dataset.size}")
    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    counter = 0
    if dataset.kind is DatasetKind.MULTICLASS:
        by_class: dict[str, list[str]] = {tag: [] for tag in dataset.catalog.tags}
        for pid, labels in dataset.items:
            by_class[next(iter(labels))].append(pid)
        for tag in dataset.catalog.tags:
            ids = by_class[tag]
            for i in rng.permutation(len(ids)):
                assignment[ids[i]] = counter % k
                counter += 1
    else:
        ids = dataset.ids()
        for i in rng.permutation(len(ids)):
            assignment[ids[i]] = counter % k
            counter += 1
    return FoldPlan(k, assignment)


def shuffle_labels(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Random relabelling baseline: permute the problem -> label-set
    mapping, preserving the multiset of label sets (and therefore the
    class histogram) exactly."""
    rng = np.random.default_rng(seed)
    label_sets = [labels for _, labels in dataset.items]
    perm = rng.permutation(len(label_sets))
    items = tuple(
        (pid, label_sets[perm[i]]) for i, (pid, _) in enumerate(dataset.items)
    )
    return replace(dataset, items=items)


def subsample_fraction(dataset: LabeledDataset, percent: float, seed: int) -> LabeledDataset:
    """Seeded subset of round(size * percent/100) items without
    replacement.

    Subsets drawn with the same seed nest: the selection is a prefix of
    one seeded permutation, so the 25% sample is contained in the 50%
    sample.
    """
    if not 0 < percent <= 100:
        raise ParameterError(f"percent must be in (0, 100], got {percent}")
    if percent == 100:
        return replace(dataset)
    m = round_half_up(dataset.size * percent / 100.0)
    if m < 1:
        raise ParameterError(f"a {percent}% subset of {dataset.size} items is empty")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.size)
    chosen = {dataset.items[i][0] for i in perm[:m]}
    items = tuple((pid, labels) for pid, labels in dataset.items if pid in chosen)
    kept = {pid: dataset.problems[pid] for pid, _ in items}
    return LabeledDataset(dataset.kind, dataset.catalog, items, kept)


def save_dataset(
    dataset: LabeledDataset,
    directory: str | Path,
    recipe: dict | None = None,
    seed: int | None = None,
) -> None:
    """Write a dataset directory: problems.jsonl (item label sets stored
    as the record tags) plus manifest.json recording kind, catalog order,
    and the builder recipe."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    for pid, labels in dataset.items:
        records.append(replace(dataset.problems[pid], tags=labels))
    write_corpus(records, directory / "problems.jsonl")
    corpus_text = (directory / "problems.jsonl").read_text(encoding="utf-8")
    manifest = {
        "format_version": DATASET_FORMAT_VERSION,
        "kind": dataset.kind.value,
        "catalog": list(dataset.catalog.tags),
        "size": dataset.size,
        "recipe": recipe or {},
        "seed": seed,
        "problems_sha256": sha256_hex(corpus_text),
    }
    atomic_write_json(directory / "manifest.json", manifest)


def load_dataset(directory: str | Path) -> LabeledDataset:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise CorpusFormatError(f"no manifest.json in {directory}")
    manifest = read_json(manifest_path)
    if manifest.get("format_version") != DATASET_FORMAT_VERSION:
        raise CorpusFormatError(
            f"unsupported dataset format version {manifest.get('format_version')!r}"
        )
    problems = parse_corpus(directory / "problems.jsonl")
    catalog = TagCatalog(tuple(manifest["catalog"]))
    items = tuple((p.id, p.tags) for p in problems)
    return LabeledDataset(
        DatasetKind(manifest["kind"]), catalog, items, {p.id: p for p in problems}
    )


def load_manifest(directory: str | Path) -> dict:
    return read_json(Path(directory) / "manifest.json")
