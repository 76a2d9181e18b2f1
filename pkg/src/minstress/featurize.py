"""Text featurization: embeddings, category lexicon, sentiment, and n-grams.

A fitted :class:`Featurizer` maps a post to one dense vector laid out as
``embedding[0..d) ++ one per lexicon category ++ (positive, negative,
neutral) ++ one per vocabulary n-gram``. The schema is fixed at fit time
and identical for every vector the featurizer produces.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Post

__all__ = [
    "tokenize",
    "NGramVocabulary",
    "build_ngram_vocab",
    "top_unigrams",
    "CategoryLexicon",
    "load_lexicon",
    "count_lexicon",
    "EmbeddingTable",
    "load_embeddings",
    "embed_mean",
    "SentimentScores",
    "load_wordlist",
    "score_sentiment",
    "FeatureVector",
    "Featurizer",
    "FeaturizerConfig",
    "featurize",
    "feature_group",
    "GROUP_EMBEDDING",
    "GROUP_LEXICON",
    "GROUP_SENTIMENT",
    "GROUP_NGRAMS",
]

# Word tokens keep #, @ and ' ; everything else non-alphanumeric separates.
# Emoji survive as single tokens, with ZWJ sequences and flag pairs intact.
_EMOJI_BASE = (
    "[\u2190-\u21ff"
    "\u2300-\u23ff"
    "\u2600-\u27bf"
    "\u2b00-\u2bff"
    "\U0001f000-\U0001faff]"
)
_EMOJI_MOD = "[\ufe0e\ufe0f\U0001f3fb-\U0001f3ff]"
_FLAG = "[\U0001f1e6-\U0001f1ff]{2}"
_TOKEN_RE = re.compile(
    rf"{_FLAG}|{_EMOJI_BASE}{_EMOJI_MOD}*(?:\u200d{_EMOJI_BASE}{_EMOJI_MOD}*)*|[\w#@']+"
)

GROUP_EMBEDDING = "embedding"
GROUP_LEXICON = "lexicon"
GROUP_SENTIMENT = "sentiment"
GROUP_NGRAMS = "ngrams"


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation, keeping #, @, ' and emoji."""
    return _TOKEN_RE.findall(text.lower())


def feature_group(name: str) -> str:
    """Feature group of a schema column, encoded in the name prefix."""
    if name.startswith("emb_"):
        return GROUP_EMBEDDING
    if name.startswith("lex:"):
        return GROUP_LEXICON
    if name.startswith("sent:"):
        return GROUP_SENTIMENT
    if name.startswith("ngram:"):
        return GROUP_NGRAMS
    return "other"


@dataclass(frozen=True)
class NGramVocabulary:
    """Top-K uni/bigrams ranked by corpus frequency (ties lexicographic)."""

    entries: tuple[tuple[str, int], ...]
    capacity: int

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ngrams(self) -> tuple[str, ...]:
        return tuple(ng for ng, _ in self.entries)

    def to_lines(self) -> list[str]:
        return [f"{ng}\t{count}" for ng, count in self.entries]

    @classmethod
    def from_lines(cls, lines: Iterable[str], capacity: int | None = None) -> "NGramVocabulary":
        entries = []
        for line in lines:
            line = line.rstrip("\n")
            if not line:
                continue
            ngram, count = line.rsplit("\t", 1)
            entries.append((ngram, int(count)))
        return cls(entries=tuple(entries), capacity=capacity if capacity is not None else len(entries))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    @classmethod
    def load(cls, path) -> "NGramVocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


def _ngram_counts(corpus: Iterable[Sequence[str]]) -> Counter:
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
        for a, b in zip(tokens, tokens[1:]):
            counts[f"{a} {b}"] += 1
    return counts


def build_ngram_vocab(corpus: Sequence[Sequence[str]], k: int = 500) -> NGramVocabulary:
    """K most frequent unigrams and bigrams pooled together.

    Ranked by total occurrence count descending, ties broken
    lexicographically ascending. Fewer than K distinct n-grams yields all
    of them.
    """
    if not corpus:
        raise ValueError("corpus must be nonempty")
    if k < 0:
        raise ValueError("k must be >= 0")
    counts = _ngram_counts(corpus)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return NGramVocabulary(entries=tuple(ranked[:k]), capacity=k)


def top_unigrams(corpus: Iterable[Sequence[str]], n: int) -> list[str]:
    """The n most frequent single tokens (same tie rule as the vocabulary)."""
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[:n]]


class CategoryLexicon:
    """Category -> patterns, where a pattern is an exact word or a prefix wildcard.

    A trailing ``*`` makes the pattern match any token starting with the
    stem ("kill*" matches "killing"). Patterns are lowercase; every
    category must be nonempty.
    """

    def __init__(self, categories: Mapping[str, Sequence[str]]):
        if not categories:
            raise ValueError("lexicon has no categories")
        self.categories: dict[str, tuple[str, ...]] = {}
        self._exact: dict[str, frozenset[str]] = {}
        self._prefixes: dict[str, tuple[str, ...]] = {}
        for name, patterns in categories.items():
            pats = tuple(p.lower() for p in patterns)
            if not pats:
                raise ValueError(f"category {name!r} has no patterns")
            self.categories[name] = pats
            self._exact[name] = frozenset(p for p in pats if not p.endswith("*"))
            self._prefixes[name] = tuple(p[:-1] for p in pats if p.endswith("*"))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.categories)

    def matches(self, token: str, category: str) -> bool:
        if token in self._exact[category]:
            return True
        return any(token.startswith(stem) for stem in self._prefixes[category])


def load_lexicon(path) -> CategoryLexicon:
    """Read a ``category<TAB>pattern`` file into a CategoryLexicon."""
    categories: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ValueError(f"{path}: line {line_no}: expected category<TAB>pattern")
            name, pattern = line.split("\t", 1)
            categories.setdefault(name.strip(), []).append(pattern.strip())
    return CategoryLexicon(categories)


def count_lexicon(tokens: Sequence[str], lexicon: CategoryLexicon) -> dict[str, float]:
    """Per-category proportion of tokens matching any of its patterns."""
    denom = max(1, len(tokens))
    out = {}
    for name in lexicon.names:
        hits = sum(1 for t in tokens if lexicon.matches(t, name))
        out[name] = hits / denom
    return out


@dataclass(frozen=True)
class EmbeddingTable:
    """Pretrained word vectors, all of one dimension."""

    dimension: int
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self):
        for word, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise ValueError(f"vector for {word!r} has length {vec.shape}, want {self.dimension}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"vector for {word!r} has non-finite entries")


def load_embeddings(path, dimension: int | None = None) -> EmbeddingTable:
    """Read ``word v1 ... vd`` lines; dimension inferred from the first line."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                if not line.strip():
                    continue
                raise ValueError(f"{path}: line {line_no}: expected word followed by values")
            word = parts[0]
            vec = np.asarray([float(v) for v in parts[1:]], dtype=np.float64)
            if dimension is None:
                dimension = vec.size
            if vec.size != dimension:
                raise ValueError(
                    f"{path}: line {line_no}: vector length {vec.size} != {dimension}"
                )
            vectors[word] = vec
    if dimension is None:
        raise ValueError(f"{path}: empty embedding file")
    return EmbeddingTable(dimension=dimension, vectors=vectors)


def embed_mean(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Arithmetic mean of known-token vectors; zero vector if nothing is known."""
    hits = [table.vectors[t] for t in tokens if t in table.vectors]
    if not hits:
        return np.zeros(table.dimension)
    return np.mean(np.vstack(hits), axis=0)


@dataclass(frozen=True)
class SentimentScores:
    positive: float
    negative: float
    neutral: float

    def __post_init__(self):
        total = self.positive + self.negative + self.neutral
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"sentiment scores sum to {total}, not 1")


def load_wordlist(path) -> frozenset[str]:
    """One word per line, lowercased."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def score_sentiment(
    tokens: Sequence[str],
    pos_lexicon: Iterable[str],
    neg_lexicon: Iterable[str],
) -> SentimentScores:
    """Proportion-based positive/negative/neutral scores summing to one."""
    pos = frozenset(pos_lexicon)
    neg = frozenset(neg_lexicon)
    if pos & neg:
        raise ValueError("sentiment lexicons must be disjoint")
    denom = max(1, len(tokens))
    p = sum(1 for t in tokens if t in pos) / denom
    n = sum(1 for t in tokens if t in neg) / denom
    total = p + n
    if total > 1.0:
        p, n = p / total, n / total
    # p + n can exceed 1 by one ulp after the divisions
    return SentimentScores(positive=p, negative=n, neutral=max(0.0, 1.0 - p - n))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(self.schema),):
            raise ValueError("values length does not match schema")


class Featurizer:
    """Bundles the fitted artifacts and produces schema-stable vectors.

    All artifacts are immutable after construction; transform calls are
    pure, so one featurizer is safe to share across threads.
    """

    def __init__(
        self,
        vocab: NGramVocabulary,
        lexicon: CategoryLexicon,
        table: EmbeddingTable,
        pos_lexicon: Iterable[str],
        neg_lexicon: Iterable[str],
    ):
        self.vocab = vocab
        self.lexicon = lexicon
        self.table = table
        self.pos_lexicon = frozenset(pos_lexicon)
        self.neg_lexicon = frozenset(neg_lexicon)
        if self.pos_lexicon & self.neg_lexicon:
            raise ValueError("sentiment lexicons must be disjoint")
        width = max(3, len(str(max(table.dimension - 1, 0))))
        names = [f"emb_{i:0{width}d}" for i in range(table.dimension)]
        names += [f"lex:{c}" for c in lexicon.names]
        names += ["sent:positive", "sent:negative", "sent:neutral"]
        names += [f"ngram:{ng}" for ng in vocab.ngrams]
        self.schema: tuple[str, ...] = tuple(names)
        self.groups: tuple[str, ...] = tuple(feature_group(n) for n in names)
        self._ngram_index = {ng: i for i, ng in enumerate(vocab.ngrams)}

    def transform_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        d = self.table.dimension
        out = np.zeros(len(self.schema))
        out[:d] = embed_mean(tokens, self.table)
        lex = count_lexicon(tokens, self.lexicon)
        for i, name in enumerate(self.lexicon.names):
            out[d + i] = lex[name]
        sent = score_sentiment(tokens, self.pos_lexicon, self.neg_lexicon)
        base = d + len(self.lexicon.names)
        out[base : base + 3] = (sent.positive, sent.negative, sent.neutral)
        base += 3
        present = set(tokens)
        present.update(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
        for ng in present:
            idx = self._ngram_index.get(ng)
            if idx is not None:
                out[base + idx] = 1.0
        return out

    def transform_text(self, text: str) -> np.ndarray:
        return self.transform_tokens(tokenize(text))

    def featurize(self, post: Post) -> FeatureVector:
        return FeatureVector(values=self.transform_text(post.text), schema=self.schema)

    def matrix(self, token_lists: Sequence[Sequence[str]]) -> np.ndarray:
        if not token_lists:
            return np.zeros((0, len(self.schema)))
        return np.vstack([self.transform_tokens(toks) for toks in token_lists])


@dataclass(frozen=True)
class FeaturizerConfig:
    """Fixed artifacts plus the vocabulary size to fit per training corpus."""

    lexicon: CategoryLexicon
    table: EmbeddingTable
    pos_lexicon: frozenset[str]
    neg_lexicon: frozenset[str]
    vocab_size: int = 500

    def fit(self, corpus_tokens: Sequence[Sequence[str]]) -> Featurizer:
        vocab = build_ngram_vocab(corpus_tokens, k=self.vocab_size)
        return Featurizer(vocab, self.lexicon, self.table, self.pos_lexicon, self.neg_lexicon)


def featurize(
    post: Post,
    vocab: NGramVocabulary,
    lexicon: CategoryLexicon,
    table: EmbeddingTable,
    pos_lexicon: Iterable[str],
    neg_lexicon: Iterable[str],
) -> FeatureVector:
    """One-shot featurization; prefer a shared Featurizer for bulk work."""
    return Featurizer(vocab, lexicon, table, pos_lexicon, neg_lexicon).featurize(post)
