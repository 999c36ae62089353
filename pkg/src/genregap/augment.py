"""Topically-controlled augmentation: per-genre generators, synthetic-set
construction from target-domain keywords, mixing, and the label-shuffle
ablation.

The built-in generator is a word n-gram chain with corpus-unigram smoothing;
at every sampling step the probabilities of the supplied keywords are
multiplied by a boost factor and renormalized, which is how the keyword
sequence steers the output toward the target topic while the chain keeps the
genre's own phrasing.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .adapter import AdapterClient
from .corpus import ConfigError, Corpus, Document, Vocabulary
from .keywords import KeywordSequence, extract_keywords
from .rng import DetRng, derive_seed
from .topics import DocTopicScores, TopicModel, infer_doc_topics


class AugmentError(Exception):
    """Generator training/sampling or plan construction failure."""


MODES = ("adapt", "baseline", "shuffled", "synthetic_only")


@dataclass(frozen=True)
class SyntheticDocument:
    genre: str
    keywords: KeywordSequence
    text: str
    provenance: Mapping[str, object]

    def __post_init__(self):
        if not self.text:
            raise AugmentError("synthetic document text is empty")

    def to_document(self, doc_id: str) -> Document:
        return Document.make(doc_id, self.genre, self.text,
                             extra={"synthetic": True, **dict(self.provenance)})


@dataclass(frozen=True)
class AugmentationPlan:
    """How a condition's training set is assembled."""

    n_original: int
    n_synthetic: int
    mode: str
    keyword_pool: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown augmentation mode {self.mode!r}")
        if self.n_original < 0 or self.n_synthetic < 0:
            raise ConfigError("plan counts must be >= 0")


@dataclass
class GeneratorHandle:
    """One trained generator, bound to a single genre."""

    genre: str
    backend: str                      # "builtin" | "external"
    order: int = 2
    smoothing: float = 0.3
    boost: float = 10.0
    length: int = 150
    trained_on: tuple[str, ...] = ()
    seed: int = 0
    # builtin payload: vocabulary, per-order context tables, unigram prior
    _vocab: Vocabulary | None = field(default=None, repr=False)
    _tables: tuple[dict, ...] = field(default_factory=tuple, repr=False)
    _uni: np.ndarray | None = field(default=None, repr=False)
    _uni_cum: np.ndarray | None = field(default=None, repr=False)
    _client: AdapterClient | None = field(default=None, repr=False)


def external_generator(genre: str, client: AdapterClient, length: int = 150) -> GeneratorHandle:
    genres = client.capabilities.get("genres", [])
    if genres and genre not in genres:
        raise AugmentError(f"adapter does not support genre {genre!r} (has {genres})")
    return GeneratorHandle(genre=genre, backend="external", length=length, _client=client)


def train_builtin_generator(docs: Sequence[Document], model: TopicModel, order: int = 2,
                            seed: int = 0, smoothing: float = 0.3, boost: float = 10.0,
                            length: int = 150) -> GeneratorHandle:
    """Count word transitions over one genre's training documents.

    Emission at each step mixes the longest matching context's counts with the
    corpus-wide unigram distribution (weight `smoothing`), so every vocabulary
    word, including keywords the genre never used, stays reachable.
    """
    if not docs:
        raise AugmentError("generator needs at least one training document")
    if order < 0:
        raise ConfigError(f"order must be >= 0, got {order}")
    if not 0.0 < smoothing < 1.0:
        raise ConfigError(f"smoothing must be in (0, 1), got {smoothing}")
    genres = {d.genre for d in docs}
    if len(genres) != 1:
        raise AugmentError(f"one generator per genre: got documents of genres {sorted(genres)}")
    vocab = model.vocabulary
    if len(vocab) == 0:
        raise AugmentError("empty vocabulary")

    counters: list[dict[tuple[int, ...], dict[int, int]]] = [dict() for _ in range(order + 1)]
    for doc in docs:
        ids = [vocab.index[t] for t in doc.norm_tokens if t in vocab.index]
        for pos, w in enumerate(ids):
            for n in range(order + 1):
                if pos < n:
                    continue
                succ = counters[n].setdefault(tuple(ids[pos - n:pos]), {})
                succ[w] = succ.get(w, 0) + 1
    if not counters[0].get((), {}):
        raise AugmentError("training documents contain no in-vocabulary tokens")

    # pack each context as (successor ids, counts, total), successors id-sorted
    tables = []
    for table in counters:
        packed = {}
        for ctx, succ in table.items():
            items = sorted(succ.items())
            packed[ctx] = ([w for w, _ in items], [c for _, c in items], sum(succ.values()))
        tables.append(packed)

    counts = np.asarray(vocab.counts, dtype=np.float64)
    uni = counts / counts.sum()
    uni_cum = np.cumsum(uni)
    uni_cum[-1] = 1.0  # guard the bisect upper edge against rounding

    return GeneratorHandle(genre=next(iter(genres)), backend="builtin", order=order,
                           smoothing=smoothing, boost=boost, length=length,
                           trained_on=tuple(d.id for d in docs), seed=seed,
                           _vocab=vocab, _tables=tuple(tables), _uni=uni, _uni_cum=uni_cum)


class _BoostedSampler:
    """Per-call sampling state: keyword boosts and precomputed segment masses.

    Each draw is an exact inverse-CDF over three segments: boosted context
    counts, the plain unigram tail, and the extra boosted-keyword unigram
    mass. With boost=1 the third segment has zero width and draws equal the
    unbiased chain.
    """

    def __init__(self, handle: GeneratorHandle, boost_ids: Sequence[int], boost: float):
        self.handle = handle
        self.lam = handle.smoothing
        self.boost = boost
        self.boost_ids = list(boost_ids)
        self.bset = frozenset(boost_ids) if boost != 1.0 else frozenset()
        uni = handle._uni
        # cumulative extra mass of each boosted keyword within segment 3
        self.extra_cum: list[float] = []
        acc = 0.0
        if boost != 1.0:
            for b in self.boost_ids:
                acc += self.lam * float(uni[b]) * (boost - 1.0)
                self.extra_cum.append(acc)
        self.extra_total = acc

    def draw(self, history: list[int], rng: DetRng) -> int:
        handle = self.handle
        lam = self.lam
        ctx_ids: Sequence[int] = ()
        ctx_counts: Sequence[int] = ()
        ctx_total = 0
        for n in range(min(handle.order, len(history)), -1, -1):
            hit = handle._tables[n].get(tuple(history[len(history) - n:]))
            if hit is not None and hit[2] > 0:
                ctx_ids, ctx_counts, ctx_total = hit
                break

        sparse_total = 0.0
        sparse_weights: list[float] = []
        if ctx_total:
            scale = (1.0 - lam) / ctx_total
            bset = self.bset
            boost = self.boost
            for w, c in zip(ctx_ids, ctx_counts):
                weight = c * scale * (boost if w in bset else 1.0)
                sparse_weights.append(weight)
                sparse_total += weight

        total = sparse_total + lam + self.extra_total
        r = rng.next_double() * total
        if r < sparse_total:
            acc = 0.0
            for i, weight in enumerate(sparse_weights):
                acc += weight
                if r < acc:
                    return ctx_ids[i]
            return ctx_ids[-1]
        r -= sparse_total
        if r < lam:
            idx = bisect.bisect_right(self.handle._uni_cum, r / lam)
            return min(idx, len(self.handle._uni) - 1)
        r -= lam
        idx = bisect.bisect_right(self.extra_cum, r)
        if idx < len(self.boost_ids):
            return self.boost_ids[idx]
        return self.boost_ids[-1] if self.boost_ids else int(np.argmax(self.handle._uni))


def generate(handle: GeneratorHandle, keywords: KeywordSequence | Sequence[str],
             length: int | None = None, seed: int = 0,
             boost: float | None = None) -> SyntheticDocument:
    """Sample one synthetic document of the handle's genre. Deterministic given seed."""
    length = handle.length if length is None else length
    if length < 1:
        raise ConfigError(f"length must be >= 1, got {length}")
    if isinstance(keywords, KeywordSequence):
        kw = keywords
    else:
        kw = KeywordSequence(tokens=tuple(keywords), source_doc="",
                             distinct_count=len(dict.fromkeys(keywords)))

    if handle.backend == "external":
        text = handle._client.generate(handle.genre, list(kw.tokens), length, seed)
        return SyntheticDocument(genre=handle.genre, keywords=kw, text=text,
                                 provenance={"backend": "external", "seed": seed,
                                             "keyword_source": kw.source_doc})

    boost = handle.boost if boost is None else boost
    if boost < 1.0:
        raise ConfigError(f"boost must be >= 1, got {boost}")
    index = handle._vocab.index
    boost_ids = sorted({index[t] for t in kw.distinct_words() if t in index})
    sampler = _BoostedSampler(handle, boost_ids, boost)

    rng = DetRng(seed)
    history: list[int] = []
    words = handle._vocab.words
    out: list[str] = []
    for _ in range(length):
        w = sampler.draw(history, rng)
        history.append(w)
        if len(history) > handle.order:
            history = history[-handle.order:] if handle.order else []
        out.append(words[w])
    return SyntheticDocument(genre=handle.genre, keywords=kw, text=" ".join(out),
                             provenance={"backend": "builtin", "seed": seed,
                                         "keyword_source": kw.source_doc, "boost": boost})


def build_synthetic_set(generators: Mapping[str, GeneratorHandle],
                        keyword_pool: Sequence[Document], model: TopicModel,
                        per_genre: int, seed: int,
                        scores: Mapping[str, DocTopicScores] | None = None,
                        m: int | None = 10, length: int | None = None,
                        boost: float | None = None,
                        fold_in_sweeps: int = 50) -> list[SyntheticDocument]:
    """per_genre documents for every genre, keyword sources drawn with replacement."""
    if not keyword_pool:
        raise AugmentError("keyword pool is empty")
    if per_genre < 0:
        raise ConfigError(f"per_genre must be >= 0, got {per_genre}")
    theta_cache: dict[str, DocTopicScores] = {}

    def theta_for(doc: Document) -> DocTopicScores:
        if scores is not None and doc.id in scores:
            return scores[doc.id]
        if doc.id not in theta_cache:
            theta_cache[doc.id] = infer_doc_topics(
                model, doc, fold_in_sweeps=fold_in_sweeps,
                seed=derive_seed(seed, "fold_in", doc.id))
        return theta_cache[doc.id]

    out: list[SyntheticDocument] = []
    for genre in sorted(generators):
        handle = generators[genre]
        for i in range(per_genre):
            pick_rng = DetRng(derive_seed(seed, "pick", genre, i))
            source = keyword_pool[pick_rng.randint(len(keyword_pool))]
            kw = extract_keywords(source, model, theta_for(source), m=m)
            doc = generate(handle, kw, length=length,
                           seed=derive_seed(seed, "gen", genre, i), boost=boost)
            out.append(doc)
    return out


def require_genre_cover(generators: Mapping[str, GeneratorHandle],
                        genres: Sequence[str]) -> None:
    missing = [g for g in genres if g not in generators]
    if missing:
        raise AugmentError(f"no generator configured for genre(s) {missing}")


def mix(original: Sequence[Document], synthetic: Sequence[SyntheticDocument],
        plan: AugmentationPlan, seed: int) -> list[Document]:
    """Seeded shuffle of n_original originals plus n_synthetic synthetics per genre."""
    by_genre_orig: dict[str, list[Document]] = {}
    for doc in original:
        by_genre_orig.setdefault(doc.genre, []).append(doc)
    by_genre_syn: dict[str, list[SyntheticDocument]] = {}
    for sdoc in synthetic:
        by_genre_syn.setdefault(sdoc.genre, []).append(sdoc)

    genres = sorted(set(by_genre_orig) | set(by_genre_syn))
    combined: list[Document] = []
    for genre in genres:
        orig = by_genre_orig.get(genre, [])
        syn = by_genre_syn.get(genre, [])
        if len(orig) < plan.n_original:
            raise AugmentError(f"genre {genre!r}: {len(orig)} original documents, "
                               f"plan needs {plan.n_original}")
        if len(syn) < plan.n_synthetic:
            raise AugmentError(f"genre {genre!r}: {len(syn)} synthetic documents, "
                               f"plan needs {plan.n_synthetic}")
        combined.extend(orig[:plan.n_original])
        for i, sdoc in enumerate(syn[:plan.n_synthetic]):
            combined.append(sdoc.to_document(f"synthetic:{genre}:{i}"))
    rng = DetRng(derive_seed(seed, "mix"))
    rng.shuffle(combined)
    return combined


def shuffle_labels(synthetic: Sequence[SyntheticDocument], seed: int) -> list[SyntheticDocument]:
    """Permute genre labels uniformly across synthetic documents; texts untouched."""
    if len({s.genre for s in synthetic}) < 2:
        raise AugmentError("label shuffle needs at least two distinct genres")
    labels = [s.genre for s in synthetic]
    rng = DetRng(derive_seed(seed, "shuffle_labels"))
    rng.shuffle(labels)
    return [SyntheticDocument(genre=lab, keywords=s.keywords, text=s.text,
                              provenance={**dict(s.provenance), "label_shuffled": True})
            for s, lab in zip(synthetic, labels)]
