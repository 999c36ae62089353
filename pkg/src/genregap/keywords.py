"""Topical keyword scoring and occurrence-preserving extraction.

A word's score within a document is its occurrence count times the
topic-weighted sum of its per-topic probabilities; extraction keeps the
occurrences of the m best-scoring distinct words in their original order,
which is what conditions the per-genre generators downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ConfigError, Document
from .topics import DocTopicScores, TopicModel


class KeywordError(Exception):
    """Document cannot produce a keyword sequence."""


@dataclass(frozen=True)
class KeywordSequence:
    """Surviving occurrences of the selected words, original order preserved."""

    tokens: tuple[str, ...]
    source_doc: str
    distinct_count: int

    def distinct_words(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for t in self.tokens:
            seen.setdefault(t)
        return tuple(seen)

    def to_dict(self) -> dict:
        return {"doc_id": self.source_doc, "tokens": list(self.tokens)}


def score_word(word: str, doc: Document, theta: DocTopicScores, model: TopicModel) -> float:
    """count(word in doc) * sum_t theta[t] * word_topic[t, word].

    Out-of-vocabulary words score 0 and are never keyword candidates.
    """
    col = model.vocabulary.get(word)
    if col is None:
        return 0.0
    count = doc.norm_tokens.count(word)
    if count == 0:
        return 0.0
    return count * float(theta.theta @ model.word_topic[:, col])


def extract_keywords(doc: Document, model: TopicModel, theta: DocTopicScores,
                     m: int | None = 10) -> KeywordSequence:
    """Keep the occurrences of the m top-scoring distinct words, in order.

    m=None keeps every in-vocabulary word (the degenerate everything-is-a-
    keyword end of the keyword-count sweep). Ties break toward the lower
    vocabulary index.
    """
    if m is not None and m < 1:
        raise ConfigError(f"m must be >= 1 or None, got {m}")
    vocab = model.vocabulary
    tokens = doc.norm_tokens
    counts: dict[str, int] = {}
    for tok in tokens:
        if tok in vocab:
            counts[tok] = counts.get(tok, 0) + 1
    if not counts:
        raise KeywordError(f"document {doc.id!r} has no in-vocabulary tokens")

    if m is None or len(counts) <= m:
        selected = set(counts)
    else:
        scored = [(-score_word(w, doc, theta, model), vocab.index[w], w) for w in counts]
        scored.sort()
        selected = {w for _, _, w in scored[:m]}

    kept = tuple(t for t in tokens if t in selected)
    return KeywordSequence(tokens=kept, source_doc=doc.id, distinct_count=len(selected))
