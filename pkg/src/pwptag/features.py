"""Tokenization, vocabularies, n-gram vectors, token sequences, embeddings.

Vocabularies reserve id 0 for UNK and id 1 for PAD; real tokens start at
id 2. N-gram feature vectors use dense feature ids starting at 0 (the two
reserved ids never appear as features).
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CorpusFormatError, ParameterError

UNK_ID = 0
PAD_ID = 1
UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"

# A token is a maximal run of letters, a maximal run of decimal digits, or
# a single punctuation/symbol character. Whitespace separates, never appears.
_TOKEN_RE = re.compile(r"[^\W\d_]+|\d+|[^\w\s]|_")


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Deterministic rule-based tokenizer.

    "Vasya has 3 apples." -> [vasya, has, 3, apples, .]
    "a<=10^5"             -> [a, <, =, 10, ^, 5]
    """
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


def ngram_strings(tokens: Sequence[str], orders: Sequence[int] = (1, 2)) -> list[str]:
    """Expand a token list into n-gram strings; n-grams of order > 1 join
    their tokens with '_'."""
    out: list[str] = []
    for n in sorted(set(orders)):
        if n < 1:
            raise ParameterError(f"invalid n-gram order {n}")
        if n == 1:
            out.extend(tokens)
        else:
            out.extend("_".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Frozen token -> id map with reserved UNK (0) and PAD (1) ids.

    Real tokens get ids 2..size-1, ordered by descending fit-corpus
    frequency with lexicographic tie-breaks, so construction is
    deterministic.
    """

    tokens: tuple[str, ...]
    min_count: int
    _index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        index = {tok: i + 2 for i, tok in enumerate(self.tokens)}
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        """Total id space, including UNK and PAD."""
        return len(self.tokens) + 2

    @property
    def num_tokens(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def feature_id(self, token: str) -> int | None:
        """Dense feature id in [0, num_tokens), or None when out of
        vocabulary."""
        idx = self._index.get(token)
        return None if idx is None else idx - 2

    def __contains__(self, token: str) -> bool:
        return token in self._index


def _fit_vocab(counts: Counter, min_count: int, max_size: int | None) -> Vocabulary:
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    if max_size is not None:
        kept = kept[:max_size]
    return Vocabulary(tokens=tuple(kept), min_count=min_count)


def build_vocab(
    token_lists: Iterable[Sequence[str]],
    min_count: int = 2,
    max_size: int | None = None,
) -> Vocabulary:
    """Fit a unigram vocabulary; tokens seen fewer than `min_count` times
    map to UNK."""
    counts: Counter = Counter()
    for tokens in token_lists:
        counts.update(tokens)
    return _fit_vocab(counts, min_count, max_size)


def build_ngram_vocab(
    token_lists: Iterable[Sequence[str]],
    orders: Sequence[int] = (1, 2),
    min_count: int = 2,
    max_size: int | None = None,
) -> Vocabulary:
    counts: Counter = Counter()
    for tokens in token_lists:
        counts.update(ngram_strings(tokens, orders))
    return _fit_vocab(counts, min_count, max_size)


@dataclass(frozen=True)
class SparseVector:
    """Sparse feature vector: strictly increasing ids, no zero values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ParameterError("indices/values must be 1-D and equal length")
        if indices.size and np.any(np.diff(indices) <= 0):
            raise ParameterError("indices must be strictly increasing")
        if np.any(values == 0.0):
            raise ParameterError("zero-valued entries are not allowed")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self, n_features: int) -> np.ndarray:
        dense = np.zeros(n_features, dtype=np.float64)
        dense[self.indices] = self.values
        return dense

    def l2_norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )


EMPTY_VECTOR = SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))


def vectorize_ngrams(
    tokens: Sequence[str], vocab: Vocabulary, orders: Sequence[int] = (1, 2)
) -> SparseVector:
    """Raw counts of in-vocabulary unigrams/bigrams; OOV n-grams are
    dropped, never mapped to UNK."""
    counts: Counter = Counter()
    for gram in ngram_strings(tokens, orders):
        fid = vocab.feature_id(gram)
        if fid is not None:
            counts[fid] += 1
    if not counts:
        return EMPTY_VECTOR
    ids = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in ids], dtype=np.float64)
    return SparseVector(ids, vals)


class TfidfTransform:
    """Smoothed-idf TF-IDF with per-document L2 normalization.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, fitted on training documents
    only; transformed vectors of nonzero documents have unit L2 norm.
    """

    def __init__(self):
        self.n_docs: int | None = None
        self.idf: np.ndarray | None = None

    def fit(self, vectors: Sequence[SparseVector], n_features: int) -> "TfidfTransform":
        df = np.zeros(n_features, dtype=np.int64)
        for vec in vectors:
            df[vec.indices] += 1
        n = len(vectors)
        self.n_docs = n
        self.idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        return self

    def transform(self, vector: SparseVector) -> SparseVector:
        if self.idf is None:
            raise ParameterError("TfidfTransform used before fit")
        if vector.nnz == 0:
            return vector
        if int(vector.indices[-1]) >= self.idf.size:
            raise ParameterError("vector does not match the fitted feature space")
        weighted = vector.values * self.idf[vector.indices]
        norm = np.sqrt(np.dot(weighted, weighted))
        if norm > 0:
            weighted = weighted / norm
        return SparseVector(vector.indices.copy(), weighted)

    def to_dict(self) -> dict:
        return {"n_docs": self.n_docs, "idf": self.idf.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "TfidfTransform":
        obj = cls()
        obj.n_docs = data["n_docs"]
        obj.idf = np.asarray(data["idf"], dtype=np.float64)
        return obj


@dataclass(frozen=True)
class TokenSequence:
    """Token ids padded for convolution; `length` counts real tokens."""

    ids: np.ndarray
    length: int

    def __post_init__(self):
        object.__setattr__(self, "ids", np.asarray(self.ids, dtype=np.int64))


MIN_SEQUENCE_LEN = 5  # widest convolution filter


def encode_sequence(
    tokens: Sequence[str], vocab: Vocabulary, max_len: int | None = None
) -> TokenSequence:
    """Map tokens to ids, truncating to a prefix of `max_len` and padding
    to at least the widest filter width."""
    if max_len is not None and max_len < MIN_SEQUENCE_LEN:
        raise ParameterError(f"max_len must be >= {MIN_SEQUENCE_LEN}, got {max_len}")
    ids = [vocab.lookup(t) for t in tokens]
    if max_len is not None:
        ids = ids[:max_len]
    length = len(ids)
    if length < MIN_SEQUENCE_LEN:
        ids = ids + [PAD_ID] * (MIN_SEQUENCE_LEN - length)
    return TokenSequence(np.array(ids, dtype=np.int64), length)


def collate_sequences(sequences: Sequence[TokenSequence]) -> tuple[np.ndarray, np.ndarray]:
    """Stack sequences into (B, L) ids plus a (B,) length array, padding to
    the batch maximum."""
    if not sequences:
        raise ParameterError("cannot collate an empty batch")
    width = max(seq.ids.size for seq in sequences)
    ids = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    lengths = np.empty(len(sequences), dtype=np.int64)
    for i, seq in enumerate(sequences):
        ids[i, : seq.ids.size] = seq.ids
        lengths[i] = seq.length
    return ids, lengths


@dataclass
class EmbeddingMatrix:
    """Per-token embedding rows plus a per-row pretrained-provenance mask.

    The PAD row is pinned to zero.
    """

    matrix: np.ndarray
    pretrained: np.ndarray  # bool per row

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.pretrained = np.asarray(self.pretrained, dtype=bool)
        if not np.all(np.isfinite(self.matrix)):
            raise ParameterError("embedding rows must be finite")
        if self.pretrained.shape != (self.matrix.shape[0],):
            raise ParameterError("provenance mask must have one entry per row")


def _read_vector_file(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word, raw = parts[0], parts[1:]
            if dim is None:
                dim = len(raw)
                if dim == 0:
                    raise CorpusFormatError(f"no vector components at line {lineno}")
            elif len(raw) != dim:
                raise CorpusFormatError(
                    f"inconsistent vector dimension at line {lineno}: "
                    f"expected {dim}, got {len(raw)}"
                )
            try:
                vectors[word] = np.array([float(x) for x in raw], dtype=np.float64)
            except ValueError:
                raise CorpusFormatError(f"unreadable number at line {lineno}") from None
    if dim is None:
        raise CorpusFormatError(f"empty embedding file: {path}")
    return vectors, dim


def load_embeddings(
    path: str | Path, vocab: Vocabulary, seed: int = 0, init_scale: float = 0.25
) -> EmbeddingMatrix:
    """Load whitespace-delimited word vectors for a vocabulary.

    In-vocabulary words take their file vectors bit-exactly; words absent
    from the file (and the UNK row) get seeded uniform init in
    [-init_scale, init_scale]. The PAD row is zero.
    """
    file_vectors, dim = _read_vector_file(path)
    rng = np.random.default_rng(seed)
    matrix = np.zeros((vocab.size, dim), dtype=np.float64)
    pretrained = np.zeros(vocab.size, dtype=bool)
    matrix[UNK_ID] = rng.uniform(-init_scale, init_scale, size=dim)
    for row, token in enumerate(vocab.tokens, start=2):
        vec = file_vectors.get(token)
        if vec is not None:
            matrix[row] = vec
            pretrained[row] = True
        else:
            matrix[row] = rng.uniform(-init_scale, init_scale, size=dim)
    return EmbeddingMatrix(matrix, pretrained)


def random_embeddings(vocab: Vocabulary, dim: int, seed: int = 0) -> EmbeddingMatrix:
    """Trainable-from-scratch embeddings: standard normal rows, zero PAD."""
    if dim <= 0:
        raise ParameterError(f"embedding dim must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((vocab.size, dim))
    matrix[PAD_ID] = 0.0
    return EmbeddingMatrix(matrix, np.zeros(vocab.size, dtype=bool))


@dataclass
class NgramFeaturizer:
    """Bag-of-n-grams pipeline fitted on training texts only."""

    vocab: Vocabulary
    orders: tuple[int, ...] = (1, 2)
    tfidf: TfidfTransform | None = None
    lowercase: bool = True

    @property
    def n_features(self) -> int:
        return self.vocab.num_tokens

    def transform(self, text: str) -> SparseVector:
        vec = vectorize_ngrams(tokenize(text, self.lowercase), self.vocab, self.orders)
        if self.tfidf is not None:
            vec = self.tfidf.transform(vec)
        return vec


def fit_ngram_featurizer(
    texts: Sequence[str],
    orders: Sequence[int] = (1, 2),
    min_count: int = 2,
    use_tfidf: bool = False,
    lowercase: bool = True,
    max_features: int | None = None,
) -> NgramFeaturizer:
    token_lists = [tokenize(t, lowercase) for t in texts]
    vocab = build_ngram_vocab(token_lists, orders, min_count, max_features)
    featurizer = NgramFeaturizer(vocab, tuple(sorted(set(orders))), None, lowercase)
    if use_tfidf:
        counts = [
            vectorize_ngrams(tokens, vocab, featurizer.orders) for tokens in token_lists
        ]
        featurizer.tfidf = TfidfTransform().fit(counts, vocab.num_tokens)
    return featurizer


@dataclass
class SequenceFeaturizer:
    """Token-id sequence pipeline for convolutional models."""

    vocab: Vocabulary
    max_len: int | None = None
    lowercase: bool = True

    def transform(self, text: str) -> TokenSequence:
        return encode_sequence(tokenize(text, self.lowercase), self.vocab, self.max_len)


def fit_sequence_featurizer(
    texts: Sequence[str],
    min_count: int = 2,
    max_len: int | None = None,
    lowercase: bool = True,
    max_features: int | None = None,
) -> SequenceFeaturizer:
    vocab = build_vocab((tokenize(t, lowercase) for t in texts), min_count, max_features)
    return SequenceFeaturizer(vocab, max_len, lowercase)
