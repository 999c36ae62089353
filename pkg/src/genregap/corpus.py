"""Labeled document corpus: ingestion, text normalization, character windows.

Documents carry a raw text plus a normalized view with digits and punctuation
stripped; classifiers and the topic model consume the normalized view only.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .manifest import atomic_write_text, canonical_dumps, sha256_hex
from .rng import DetRng


class CorpusError(Exception):
    """Malformed, duplicated, or otherwise unusable corpus input."""


class ConfigError(Exception):
    """A configuration that cannot produce a usable artifact."""


# Character classes are decided by Unicode category for cross-platform
# determinism: P*/S* and the digit class Nd become spaces, as do separators
# and control/format characters; everything else is kept.
_DROP_PREFIXES = ("P", "S", "Z")
_DROP_EXACT = {"Nd", "Cc", "Cf"}
_char_is_dropped: dict[str, bool] = {}


def _dropped(ch: str) -> bool:
    hit = _char_is_dropped.get(ch)
    if hit is None:
        cat = unicodedata.category(ch)
        hit = cat[0] in _DROP_PREFIXES or cat in _DROP_EXACT
        _char_is_dropped[ch] = hit
    return hit


def normalize(text: str, lowercase: bool = True) -> str:
    """Strip digits and punctuation, collapse whitespace, optionally lowercase.

    Dropped characters are replaced by spaces (not deleted) so that
    "word1word" does not collapse into a single token. Idempotent.
    """
    cleaned = "".join(" " if _dropped(ch) else ch for ch in text)
    if lowercase:
        cleaned = cleaned.lower()
    return " ".join(cleaned.split())


@dataclass(frozen=True)
class Document:
    """One labeled text unit."""

    id: str
    genre: str
    raw_text: str
    norm_text: str
    extra: Mapping[str, object] = field(default_factory=dict)

    @staticmethod
    def make(id: str, genre: str, raw_text: str, lowercase: bool = True,
             extra: Mapping[str, object] | None = None) -> "Document":
        return Document(id=id, genre=genre, raw_text=raw_text,
                        norm_text=normalize(raw_text, lowercase=lowercase),
                        extra=dict(extra or {}))

    @cached_property
    def norm_tokens(self) -> tuple[str, ...]:
        return tuple(self.norm_text.split())


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    genres: frozenset[str]

    def __post_init__(self):
        if not self.documents:
            raise CorpusError("corpus is empty")
        for doc in self.documents:
            if doc.genre not in self.genres:
                raise CorpusError(f"document {doc.id!r} has undeclared genre {doc.genre!r}")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @cached_property
    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}

    @cached_property
    def genre_list(self) -> tuple[str, ...]:
        return tuple(sorted(self.genres))

    @staticmethod
    def from_documents(documents: Iterable[Document]) -> "Corpus":
        docs = tuple(documents)
        seen: set[str] = set()
        for d in docs:
            if d.id in seen:
                raise CorpusError(f"duplicate document id {d.id!r}")
            seen.add(d.id)
        return Corpus(documents=docs, genres=frozenset(d.genre for d in docs))


def ingest(path: str, format: str = "jsonl", lowercase: bool = True) -> Corpus:
    """Read a line-delimited JSON corpus file into a Corpus.

    Each line must be an object with non-empty "id", "genre", and "text"
    fields; unknown fields are preserved and survive a round-trip through
    emit(). Raises CorpusError naming the offending line.
    """
    if format != "jsonl":
        raise ConfigError(f"unsupported corpus format {format!r}")
    documents: list[Document] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"{path}:{lineno}: record is not an object")
            missing = [k for k in ("id", "genre", "text") if not record.get(k)]
            if missing:
                raise CorpusError(f"{path}:{lineno}: missing or empty field(s) {missing}")
            doc_id = str(record["id"])
            if doc_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            extra = {k: v for k, v in record.items() if k not in ("id", "genre", "text")}
            documents.append(Document.make(doc_id, str(record["genre"]), str(record["text"]),
                                           lowercase=lowercase, extra=extra))
    if not documents:
        raise CorpusError(f"{path}: no documents")
    return Corpus(documents=tuple(documents), genres=frozenset(d.genre for d in documents))


def emit(corpus: Corpus, path: str) -> None:
    """Write a corpus back to the line-delimited JSON format, ids/genres/text byte-exact."""
    lines = []
    for doc in corpus:
        record = {"id": doc.id, "genre": doc.genre, "text": doc.raw_text}
        record.update(doc.extra)
        lines.append(json.dumps(record, ensure_ascii=False) + "\n")
    atomic_write_text(path, "".join(lines))


def sample_window(doc: Document, width: int = 1000, rng: DetRng | None = None) -> str:
    """A contiguous slice of norm_text of length min(width, len), uniformly placed.

    Short documents are returned whole, never padded.
    """
    if width < 1:
        raise ConfigError(f"window width must be >= 1, got {width}")
    text = doc.norm_text
    if len(text) <= width:
        return text
    if rng is None:
        raise ConfigError("rng required when the document is longer than the window")
    start = rng.randint(len(text) - width + 1)
    return text[start:start + width]


@dataclass(frozen=True)
class Vocabulary:
    """Dense word index with corpus frequencies and an excluded stoplist."""

    words: tuple[str, ...]
    counts: tuple[int, ...]
    stoplist: frozenset[str]

    @cached_property
    def index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def get(self, word: str) -> int | None:
        return self.index.get(word)

    def content_hash(self) -> str:
        payload = {"words": list(self.words), "counts": list(self.counts),
                   "stoplist": sorted(self.stoplist)}
        return sha256_hex(canonical_dumps(payload))

    def to_dict(self) -> dict:
        return {"words": list(self.words), "counts": list(self.counts),
                "stoplist": sorted(self.stoplist)}

    @staticmethod
    def from_dict(payload: dict) -> "Vocabulary":
        return Vocabulary(words=tuple(payload["words"]),
                          counts=tuple(int(c) for c in payload["counts"]),
                          stoplist=frozenset(payload["stoplist"]))


def build_vocabulary(corpus: Corpus, min_count: int = 1, stop_top_n: int = 0) -> Vocabulary:
    """Index words with frequency >= min_count, excluding the stop_top_n most frequent.

    Index order is (frequency desc, word asc); ties in the stoplist cut use
    the same order, so construction is deterministic.
    """
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    if stop_top_n < 0:
        raise ConfigError(f"stop_top_n must be >= 0, got {stop_top_n}")
    freq = Counter()
    for doc in corpus:
        freq.update(doc.norm_tokens)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    stoplist = frozenset(w for w, _ in ranked[:stop_top_n])
    kept = [(w, c) for w, c in ranked[stop_top_n:] if c >= min_count]
    if not kept:
        raise ConfigError("vocabulary is empty after min_count/stoplist filtering")
    return Vocabulary(words=tuple(w for w, _ in kept),
                      counts=tuple(c for _, c in kept),
                      stoplist=stoplist)
