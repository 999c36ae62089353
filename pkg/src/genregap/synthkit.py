"""Planted-ground-truth corpora with controllable topic-genre bias.

Each document mixes three token sources: genre style markers (the classifier's
legitimate signal), shared filler words, and topic content words drawn mostly
from the document's planted topic. The bias parameter controls how strongly a
genre's documents concentrate on its preferred topics, which is what creates
the measurable transfer gap.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Mapping

from .corpus import ConfigError, Corpus, Document
from .manifest import atomic_write_json
from .rng import DetRng, derive_seed

GENRE_NAMES = ("review", "news", "howto", "blog", "wiki", "forum")


def _letters(i: int) -> str:
    """Digit-free base-26 suffix; normalization must not mangle planted words."""
    out = []
    while True:
        out.append(chr(ord("a") + i % 26))
        i //= 26
        if i == 0:
            return "".join(reversed(out))


def _zipf_cumulative(n: int, exponent: float) -> list[float]:
    weights = [1.0 / (r + 1.0) ** exponent for r in range(n)]
    total = sum(weights)
    acc = 0.0
    cum = []
    for w in weights:
        acc += w / total
        cum.append(acc)
    cum[-1] = 1.0
    return cum


def _draw(cum: list[float], words: list[str], rng: DetRng) -> str:
    u = rng.next_double()
    return words[min(bisect.bisect_right(cum, u), len(words) - 1)]


@dataclass(frozen=True)
class PlantedSpec:
    """Desk-scale corpus recipe; defaults run the full pipeline in minutes."""

    genres: int = 4
    topics: int = 8
    vocab_size: int = 2000
    docs_per_genre: int = 400
    doc_length: int = 300
    bias: float = 0.9
    style_rate: float = 0.08
    style_fidelity: float = 0.60
    common_rate: float = 0.10
    content_purity: float = 1.0
    style_words_per_genre: int = 15
    common_words: int = 30
    zipf_exponent: float = 1.05   # topic content words: skewed, repeat within docs
    marker_zipf: float = 0.4      # style/common words: near-flat, rarely repeat
    genres_per_topic: int = 1     # how many genres prefer each topic
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.bias <= 1.0:
            raise ConfigError(f"bias must lie in [0, 1], got {self.bias}")
        if not 0.0 < self.style_fidelity <= 1.0:
            raise ConfigError(f"style_fidelity must lie in (0, 1], got {self.style_fidelity}")
        if self.topics < 2 or self.genres < 2:
            raise ConfigError("need at least 2 topics and 2 genres")
        if self.genres > len(GENRE_NAMES):
            raise ConfigError(f"at most {len(GENRE_NAMES)} genres supported")
        if self.style_rate + self.common_rate >= 1.0:
            raise ConfigError("style_rate + common_rate must leave room for content tokens")
        reserved = self.common_words + self.genres * self.style_words_per_genre
        if self.vocab_size - reserved < self.topics * 10:
            raise ConfigError("vocab_size too small for the requested structure")

    def genre_names(self) -> tuple[str, ...]:
        return GENRE_NAMES[:self.genres]

    def preferred_topics(self) -> dict[str, tuple[int, ...]]:
        """Round-robin assignment: topic t is preferred by genres t..t+k-1 mod G."""
        names = self.genre_names()
        out: dict[str, list[int]] = {g: [] for g in names}
        for t in range(self.topics):
            for j in range(min(self.genres_per_topic, self.genres)):
                out[names[(t + j) % self.genres]].append(t)
        return {g: tuple(v) for g, v in out.items()}

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in (
            "genres", "topics", "vocab_size", "docs_per_genre", "doc_length", "bias",
            "style_rate", "common_rate", "content_purity", "style_words_per_genre",
            "common_words", "zipf_exponent", "seed")}


@dataclass(frozen=True)
class PlantedTruth:
    """Sidecar ground truth for a generated corpus."""

    spec: PlantedSpec
    assignments: Mapping[str, dict]          # doc id -> {"genre": ..., "topic": ...}
    topic_words: Mapping[int, tuple[str, ...]]
    style_words: Mapping[str, tuple[str, ...]]
    preferred: Mapping[str, tuple[int, ...]]

    def save(self, path: str) -> None:
        atomic_write_json(path, {
            "kind": "planted_truth",
            "spec": self.spec.to_dict(),
            "assignments": {k: dict(v) for k, v in self.assignments.items()},
            "topic_words": {str(t): list(w) for t, w in self.topic_words.items()},
            "style_words": {g: list(w) for g, w in self.style_words.items()},
            "preferred": {g: list(t) for g, t in self.preferred.items()},
        })


def make_biased_corpus(spec: PlantedSpec) -> tuple[Corpus, PlantedTruth]:
    """Generate a corpus plus its planted assignments. Deterministic given seed."""
    names = spec.genre_names()
    preferred = spec.preferred_topics()

    common = [f"com{_letters(i)}" for i in range(spec.common_words)]
    style = {g: [f"sty{_letters(gi)}{_letters(i)}" for i in range(spec.style_words_per_genre)]
             for gi, g in enumerate(names)}
    content_budget = spec.vocab_size - spec.common_words \
        - spec.genres * spec.style_words_per_genre
    per_topic = content_budget // spec.topics
    topic_words = {t: [f"top{_letters(t)}{_letters(i)}" for i in range(per_topic)]
                   for t in range(spec.topics)}

    common_cum = _zipf_cumulative(len(common), spec.marker_zipf)
    style_cum = _zipf_cumulative(spec.style_words_per_genre, spec.marker_zipf)
    topic_cum = _zipf_cumulative(per_topic, spec.zipf_exponent)

    documents: list[Document] = []
    assignments: dict[str, dict] = {}
    for g in names:
        for i in range(spec.docs_per_genre):
            doc_id = f"{g}-{i:04d}"
            rng = DetRng(derive_seed(spec.seed, "doc", doc_id))
            if rng.next_double() < spec.bias:
                topic = preferred[g][rng.randint(len(preferred[g]))]
            else:
                topic = rng.randint(spec.topics)
            tokens: list[str] = []
            for _ in range(spec.doc_length):
                r = rng.next_double()
                if r < spec.style_rate:
                    # markers mostly from the own genre's set; the blur keeps
                    # style words topically diffuse and the ceiling imperfect
                    if rng.next_double() < spec.style_fidelity:
                        marker_genre = g
                    else:
                        marker_genre = names[rng.randint(spec.genres)]
                    tokens.append(_draw(style_cum, style[marker_genre], rng))
                elif r < spec.style_rate + spec.common_rate:
                    tokens.append(_draw(common_cum, common, rng))
                else:
                    if rng.next_double() < spec.content_purity:
                        source = topic
                    else:
                        source = rng.randint(spec.topics)
                    tokens.append(_draw(topic_cum, topic_words[source], rng))
            documents.append(Document.make(doc_id, g, " ".join(tokens)))
            assignments[doc_id] = {"genre": g, "topic": topic}

    corpus = Corpus.from_documents(documents)
    truth = PlantedTruth(spec=spec, assignments=assignments,
                         topic_words={t: tuple(w) for t, w in topic_words.items()},
                         style_words={g: tuple(w) for g, w in style.items()},
                         preferred=preferred)
    return corpus, truth


def make_disjoint_topic_corpus(n_docs: int = 200, words_per_topic: int = 20,
                               doc_length: int = 300, seed: int = 0,
                               ) -> tuple[Corpus, tuple[tuple[str, ...], tuple[str, ...]]]:
    """Two topics with fully disjoint vocabularies; each document uses one topic.

    The crispest possible recovery target for the Gibbs trainer: the learned
    top words of each topic should reproduce the planted word sets.
    """
    set_a = tuple(f"alpha{_letters(i)}" for i in range(words_per_topic))
    set_b = tuple(f"beta{_letters(i)}" for i in range(words_per_topic))
    documents = []
    for i in range(n_docs):
        rng = DetRng(derive_seed(seed, "disjoint", i))
        words = set_a if i % 2 == 0 else set_b
        tokens = [words[rng.randint(len(words))] for _ in range(doc_length)]
        documents.append(Document.make(f"doc-{i:04d}", "only", " ".join(tokens)))
    return Corpus.from_documents(documents), (set_a, set_b)
