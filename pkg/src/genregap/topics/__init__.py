"""Topic models: collapsed-Gibbs LDA training, fold-in scoring, coherence,
diversity, topic-count selection, and scoring of externally trained
embedding-topic parameters.

A compiled sweep kernel is selected at import time when available; the
pure-Python twin produces bit-identical results (see tests/test_kernel_parity).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from ..corpus import ConfigError, Corpus, Document, Vocabulary
from ..manifest import atomic_write_text, canonical_dumps, sha256_hex
from ..rng import MASK64, splitmix64_next

from . import _kernels_py

try:
    from . import _kernels  # compiled extension, optional
except ImportError:  # pragma: no cover - depends on build environment
    _kernels = None

KERNEL_BACKEND = "compiled" if _kernels is not None else "python"

logger = logging.getLogger("genregap.topics")


class TopicModelError(Exception):
    """Unusable training input or malformed model state."""


def _kernel_module(backend: str | None):
    if backend is None:
        backend = KERNEL_BACKEND
    if backend == "compiled":
        if _kernels is None:
            raise ConfigError("compiled kernel requested but the extension is not built")
        return _kernels
    if backend == "python":
        return _kernels_py
    raise ConfigError(f"unknown kernel backend {backend!r}")


@dataclass(frozen=True)
class DocTopicScores:
    """Per-document topic scores: a length-K probability simplex."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 1 or theta.size < 1:
            raise TopicModelError("theta must be a non-empty vector")
        if np.any(theta < 0.0) or np.any(theta > 1.0):
            raise TopicModelError("theta entries must lie in [0, 1]")
        if abs(float(theta.sum()) - 1.0) > 1e-9:
            raise TopicModelError(f"theta sums to {theta.sum()!r}, expected 1")

    @property
    def k(self) -> int:
        return self.theta.size

    def dominant_topic(self) -> int:
        return int(np.argmax(self.theta))


@dataclass(frozen=True)
class TopicModel:
    """Per-topic word distributions over a shared vocabulary.

    word_topic[t, w] is the probability of word w under topic t; every row
    is a probability simplex regardless of whether the rows came from the
    built-in Gibbs trainer or from external embedding-topic parameters.
    """

    k: int
    vocabulary: Vocabulary
    word_topic: np.ndarray
    hyper_alpha: float
    hyper_beta: float

    def __post_init__(self):
        wt = np.ascontiguousarray(np.asarray(self.word_topic, dtype=np.float64))
        object.__setattr__(self, "word_topic", wt)
        if self.k < 1:
            raise TopicModelError(f"k must be >= 1, got {self.k}")
        if wt.shape != (self.k, len(self.vocabulary)):
            raise TopicModelError(f"word_topic shape {wt.shape} does not match "
                                  f"(k={self.k}, v={len(self.vocabulary)})")
        if np.any(wt < 0.0) or np.any(wt > 1.0):
            raise TopicModelError("word_topic entries must lie in [0, 1]")
        sums = wt.sum(axis=1)
        worst = float(np.max(np.abs(sums - 1.0)))
        if worst > 1e-9:
            raise TopicModelError(f"word_topic rows must sum to 1 (worst deviation {worst:g})")

    @property
    def v(self) -> int:
        return len(self.vocabulary)

    def to_dict(self) -> dict:
        return {
            "kind": "topic_model",
            "k": self.k,
            "v": self.v,
            "hyper_alpha": self.hyper_alpha,
            "hyper_beta": self.hyper_beta,
            "vocab_sha256": self.vocabulary.content_hash(),
            "vocabulary": self.vocabulary.to_dict(),
            "word_topic": [[float(x) for x in row] for row in self.word_topic],
        }

    def content_hash(self) -> str:
        return sha256_hex(canonical_dumps(self.to_dict()))

    @staticmethod
    def from_dict(payload: dict) -> "TopicModel":
        vocab = Vocabulary.from_dict(payload["vocabulary"])
        stored_hash = payload.get("vocab_sha256")
        if stored_hash and stored_hash != vocab.content_hash():
            raise TopicModelError("vocabulary hash mismatch in model file")
        return TopicModel(k=int(payload["k"]), vocabulary=vocab,
                          word_topic=np.array(payload["word_topic"], dtype=np.float64),
                          hyper_alpha=float(payload["hyper_alpha"]),
                          hyper_beta=float(payload["hyper_beta"]))


def save_model(model: TopicModel, path: str) -> None:
    atomic_write_text(path, canonical_dumps(model.to_dict()) + "\n")


def load_model(path: str) -> TopicModel:
    with open(path, "r", encoding="utf-8") as fh:
        return TopicModel.from_dict(json.load(fh))


@dataclass(frozen=True)
class EtmParameters:
    """Externally trained embedding-topic parameters: word and topic embeddings."""

    rho: np.ndarray    # (V, E) word embeddings
    alpha: np.ndarray  # (K, E) topic embeddings

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", alpha)
        if rho.ndim != 2 or alpha.ndim != 2:
            raise TopicModelError("rho and alpha must be 2-D matrices")
        if rho.shape[1] != alpha.shape[1]:
            raise TopicModelError(f"embedding dimension mismatch: rho has E={rho.shape[1]}, "
                                  f"alpha has E={alpha.shape[1]}")
        if rho.shape[1] < 1:
            raise TopicModelError("embedding dimension must be >= 1")
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(alpha))):
            raise TopicModelError("embeddings must be finite")

    def save(self, path: str) -> None:
        payload = {"kind": "etm_parameters",
                   "rho": [[float(x) for x in row] for row in self.rho],
                   "alpha": [[float(x) for x in row] for row in self.alpha]}
        atomic_write_text(path, canonical_dumps(payload) + "\n")

    @staticmethod
    def load(path: str) -> "EtmParameters":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return EtmParameters(rho=np.array(payload["rho"], dtype=np.float64),
                             alpha=np.array(payload["alpha"], dtype=np.float64))


def etm_word_topic(params: EtmParameters) -> np.ndarray:
    """Row t is softmax over the vocabulary of rho @ alpha_t."""
    logits = params.rho @ params.alpha.T          # (V, K)
    logits = logits - logits.max(axis=0, keepdims=True)
    expd = np.exp(logits)
    return (expd / expd.sum(axis=0, keepdims=True)).T.copy()


def model_from_etm(params: EtmParameters, vocab: Vocabulary,
                   hyper_alpha: float = 1.0, hyper_beta: float = 0.0) -> TopicModel:
    """Wrap externally trained embedding-topic parameters as a scoreable model."""
    wt = etm_word_topic(params)
    if wt.shape[1] != len(vocab):
        raise TopicModelError(f"rho has {wt.shape[1]} rows but vocabulary has {len(vocab)} words")
    return TopicModel(k=wt.shape[0], vocabulary=vocab, word_topic=wt,
                      hyper_alpha=hyper_alpha, hyper_beta=hyper_beta)


@dataclass
class GibbsState:
    """Sampler bookkeeping: assignments, count tables, and the RNG state."""

    doc_ids: tuple[str, ...]
    words: np.ndarray     # int32[n_tokens]
    doc_ptr: np.ndarray   # int32[n_docs + 1]
    z: np.ndarray         # int32[n_tokens]
    ndk: np.ndarray       # int32[n_docs, K]
    nkw: np.ndarray       # int32[K, V]
    nk: np.ndarray        # int32[K]
    rng_state: int

    def check_consistency(self) -> None:
        """Recompute all count tables from assignments; raise on any mismatch."""
        k, v = self.nkw.shape
        nkw = np.bincount(self.z.astype(np.int64) * v + self.words, minlength=k * v)
        if not np.array_equal(nkw.reshape(k, v), self.nkw):
            raise TopicModelError("topic-word counts inconsistent with assignments")
        if not np.array_equal(np.bincount(self.z, minlength=k), self.nk):
            raise TopicModelError("topic totals inconsistent with assignments")
        for d in range(len(self.doc_ptr) - 1):
            seg = self.z[self.doc_ptr[d]:self.doc_ptr[d + 1]]
            if not np.array_equal(np.bincount(seg, minlength=k), self.ndk[d]):
                raise TopicModelError(f"doc-topic counts inconsistent for doc index {d}")


def tokenize_to_ids(doc: Document, vocab: Vocabulary) -> np.ndarray:
    """Vocabulary ids of a document's in-vocabulary tokens, in order."""
    index = vocab.index
    return np.array([index[t] for t in doc.norm_tokens if t in index], dtype=np.int32)


def _init_assignments(words: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, int]:
    """Seed-deterministic initial topics; consumes one SplitMix64 draw per token."""
    state = seed & MASK64
    z = np.empty(len(words), dtype=np.int32)
    for i in range(len(words)):
        state, out = splitmix64_next(state)
        t = int(((out >> 11) * (1.0 / 9007199254740992.0)) * k)
        z[i] = k - 1 if t >= k else t
    return z, state


def train_lda(corpus: Corpus, vocab: Vocabulary, k: int,
              hyper_alpha: float | None = None, hyper_beta: float = 0.01,
              sweeps: int = 500, seed: int = 0, debug: bool = False,
              backend: str | None = None, return_state: bool = False):
    """Train a topic model by collapsed Gibbs sampling.

    word_topic is the smoothed, normalized topic-word count table after the
    final sweep. Deterministic given (inputs, seed) on either kernel backend.
    Documents with no in-vocabulary tokens are excluded with a warning.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if sweeps < 1:
        raise ConfigError(f"sweeps must be >= 1, got {sweeps}")
    if hyper_alpha is None:
        hyper_alpha = 50.0 / k

    kept_ids: list[str] = []
    token_runs: list[np.ndarray] = []
    for doc in corpus:
        ids = tokenize_to_ids(doc, vocab)
        if len(ids) == 0:
            logger.warning("document %r has no in-vocabulary tokens; excluded from training", doc.id)
            continue
        kept_ids.append(doc.id)
        token_runs.append(ids)
    if not token_runs:
        raise TopicModelError("no documents with in-vocabulary tokens; cannot train")

    words = np.concatenate(token_runs).astype(np.int32)
    doc_ptr = np.zeros(len(token_runs) + 1, dtype=np.int32)
    doc_ptr[1:] = np.cumsum([len(r) for r in token_runs])

    v = len(vocab)
    z, rng_state = _init_assignments(words, k, seed)
    ndk = np.zeros((len(token_runs), k), dtype=np.int32)
    nkw = np.zeros((k, v), dtype=np.int32)
    nk = np.zeros(k, dtype=np.int32)
    for d in range(len(token_runs)):
        seg = slice(doc_ptr[d], doc_ptr[d + 1])
        np.add.at(ndk[d], z[seg], 1)
        np.add.at(nkw, (z[seg], words[seg]), 1)
    np.add.at(nk, z, 1)

    kernel = _kernel_module(backend)
    state = GibbsState(doc_ids=tuple(kept_ids), words=words, doc_ptr=doc_ptr,
                       z=z, ndk=ndk, nkw=nkw, nk=nk, rng_state=rng_state)
    if debug:
        state.check_consistency()
        for _ in range(sweeps):
            state.rng_state = kernel.lda_train_sweeps(
                words, doc_ptr, z, ndk, nkw, nk, hyper_alpha, hyper_beta, 1, state.rng_state)
            state.check_consistency()
    else:
        state.rng_state = kernel.lda_train_sweeps(
            words, doc_ptr, z, ndk, nkw, nk, hyper_alpha, hyper_beta, sweeps, state.rng_state)

    word_topic = (nkw + hyper_beta) / (nk[:, None] + v * hyper_beta)
    model = TopicModel(k=k, vocabulary=vocab, word_topic=word_topic,
                       hyper_alpha=hyper_alpha, hyper_beta=hyper_beta)
    if return_state:
        return model, state
    return model


def infer_doc_topics(model: TopicModel, doc: Document, fold_in_sweeps: int = 50,
                     seed: int = 0, backend: str | None = None) -> DocTopicScores:
    """Fold-in inference: smoothed normalized topic counts for one document,
    holding the model's topic-word rows fixed. Deterministic given seed."""
    words = tokenize_to_ids(doc, model.vocabulary)
    if len(words) == 0:
        raise TopicModelError(f"document {doc.id!r} has no in-vocabulary tokens")
    k = model.k
    z, rng_state = _init_assignments(words, k, seed)
    ndk = np.bincount(z, minlength=k).astype(np.int32)
    kernel = _kernel_module(backend)
    kernel.fold_in_sweeps(words, model.word_topic, ndk, z,
                          model.hyper_alpha, fold_in_sweeps, rng_state)
    theta = (ndk + model.hyper_alpha) / (len(words) + k * model.hyper_alpha)
    return DocTopicScores(theta=theta)


def top_words(model: TopicModel, t: int, k: int) -> list[str]:
    """The k highest-probability words of topic t, ties broken by vocabulary index."""
    if not 0 <= t < model.k:
        raise IndexError(f"topic index {t} out of range [0, {model.k})")
    row = model.word_topic[t]
    order = np.lexsort((np.arange(row.size), -row))
    return [model.vocabulary.words[i] for i in order[:k]]


def _doc_word_sets(corpus: Corpus, vocab: Vocabulary, needed: set[int]) -> list[set[int]]:
    index = vocab.index
    out = []
    for doc in corpus:
        present = {index[t] for t in set(doc.norm_tokens) if t in index}
        out.append(present & needed)
    return out


def topic_coherence(model: TopicModel, corpus: Corpus, top_k: int = 10) -> float:
    """Mean NPMI over all top-word pairs of each topic, averaged over topics.

    Document-level co-occurrence with add-one smoothing on counts; pairs that
    never co-occur contribute the NPMI floor of -1 instead of NaN, and pairs
    that co-occur in every document contribute the ceiling of 1.
    """
    tops = [top_words(model, t, top_k) for t in range(model.k)]
    index = model.vocabulary.index
    needed = {index[w] for words in tops for w in words if w in index}
    doc_sets = _doc_word_sets(corpus, model.vocabulary, needed)
    n_docs = len(doc_sets)

    df: dict[int, int] = {w: 0 for w in needed}
    pair_df: dict[tuple[int, int], int] = {}
    for present in doc_sets:
        for w in present:
            df[w] += 1
        ordered = sorted(present)
        for a, b in combinations(ordered, 2):
            pair_df[(a, b)] = pair_df.get((a, b), 0) + 1

    per_topic: list[float] = []
    for words in tops:
        ids = [index[w] for w in words if w in index]
        pairs = list(combinations(ids, 2))
        if not pairs:
            per_topic.append(0.0)
            continue
        acc = 0.0
        for a, b in pairs:
            key = (a, b) if a < b else (b, a)
            c_ab = pair_df.get(key, 0)
            if c_ab == 0:
                acc += -1.0
            elif c_ab == n_docs:
                acc += 1.0
            else:
                p_ab = (c_ab + 1) / (n_docs + 1)
                p_a = (df[a] + 1) / (n_docs + 1)
                p_b = (df[b] + 1) / (n_docs + 1)
                npmi = math.log(p_ab / (p_a * p_b)) / (-math.log(p_ab))
                acc += max(-1.0, min(1.0, npmi))
        per_topic.append(acc / len(pairs))
    return float(sum(per_topic) / len(per_topic))


def topic_diversity(model: TopicModel, top_k: int = 25) -> float:
    """Fraction of distinct words across all topics' top-k lists."""
    if top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    lists = [top_words(model, t, top_k) for t in range(model.k)]
    distinct = set().union(*lists)
    slots = sum(len(lst) for lst in lists)
    return len(distinct) / slots


@dataclass(frozen=True)
class TopicCountSelection:
    chosen_k: int
    table: tuple[dict, ...]   # one row per candidate: k, coherence, diversity, product


def select_topic_count(corpus: Corpus, vocab: Vocabulary, candidates: Sequence[int],
                       hyper_alpha: float | None = None, hyper_beta: float = 0.01,
                       sweeps: int = 200, seed: int = 0, coherence_top_k: int = 10,
                       diversity_top_k: int = 25,
                       backend: str | None = None) -> TopicCountSelection:
    """Pick the candidate K maximizing coherence x diversity; ties go to smaller K."""
    if not candidates:
        raise ConfigError("candidate list is empty")
    rows = []
    for k in candidates:
        model = train_lda(corpus, vocab, k, hyper_alpha=hyper_alpha, hyper_beta=hyper_beta,
                          sweeps=sweeps, seed=seed, backend=backend)
        coh = topic_coherence(model, corpus, top_k=coherence_top_k)
        div = topic_diversity(model, top_k=diversity_top_k)
        rows.append({"k": int(k), "coherence": coh, "diversity": div, "product": coh * div})
    best = max(rows, key=lambda r: (r["product"], -r["k"]))
    return TopicCountSelection(chosen_k=best["k"], table=tuple(rows))
