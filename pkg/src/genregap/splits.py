"""Transfer-assessment splits: balanced on/off-topic train, off-topic
validation, and on-topic test partitions for one (topic, N) cell.

Documents are ranked per genre by their score for the chosen topic; the test
set takes the most on-topic documents, training sets are drawn from the two
ends of the ranking, and ties are broken by document id so splits are
reproducible regardless of corpus order.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import Mapping

from .corpus import ConfigError, Corpus
from .manifest import atomic_write_json, canonical_dumps, sha256_hex, write_jsonl
from .rng import DetRng, derive_seed
from .topics import DocTopicScores, TopicModel, TopicModelError, infer_doc_topics

logger = logging.getLogger("genregap.splits")

PARTITIONS = ("on_train", "off_train", "off_val", "on_test")


class SplitError(Exception):
    """Insufficient capacity or inconsistent split construction."""


@dataclass(frozen=True)
class SplitSpec:
    """Parameters of one transfer cell: the paper-style N plus fixed val/test sizes."""

    topic: int
    n_train: int
    n_val: int = 300
    n_test: int = 300
    seed: int = 0

    def __post_init__(self):
        for name in ("n_train", "n_val", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {"topic": self.topic, "n_train": self.n_train, "n_val": self.n_val,
                "n_test": self.n_test, "seed": self.seed}


@dataclass(frozen=True)
class TransferSplit:
    """Genre -> document-id lists for the four partitions, plus provenance."""

    spec: SplitSpec
    model_hash: str
    on_train: Mapping[str, tuple[str, ...]]
    off_train: Mapping[str, tuple[str, ...]]
    off_val: Mapping[str, tuple[str, ...]]
    on_test: Mapping[str, tuple[str, ...]]

    def partition(self, name: str) -> Mapping[str, tuple[str, ...]]:
        if name not in PARTITIONS:
            raise ConfigError(f"unknown partition {name!r}")
        return getattr(self, name)

    def all_ids(self) -> set[str]:
        out: set[str] = set()
        for name in PARTITIONS:
            for ids in self.partition(name).values():
                out.update(ids)
        return out

    def genres(self) -> tuple[str, ...]:
        return tuple(sorted(self.on_train))

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "model_hash": self.model_hash,
                **{name: {g: list(ids) for g, ids in self.partition(name).items()}
                   for name in PARTITIONS}}


def score_corpus(corpus: Corpus, model: TopicModel, fold_in_sweeps: int = 50,
                 seed: int = 0, backend: str | None = None,
                 ) -> tuple[dict[str, DocTopicScores], list[str]]:
    """Score every document; returns (id -> scores, unscorable ids).

    Per-document seeds are derived from (seed, doc id), so results match
    individual infer_doc_topics calls and do not depend on iteration order.
    """
    scores: dict[str, DocTopicScores] = {}
    unscorable: list[str] = []
    for doc in corpus:
        doc_seed = derive_seed(seed, "fold_in", doc.id)
        try:
            scores[doc.id] = infer_doc_topics(model, doc, fold_in_sweeps=fold_in_sweeps,
                                              seed=doc_seed, backend=backend)
        except TopicModelError:
            unscorable.append(doc.id)
    if not scores:
        raise SplitError("no document in the corpus could be scored")
    if unscorable:
        logger.warning("%d documents could not be scored", len(unscorable))
    return scores, unscorable


def rank_by_topic(corpus: Corpus, scores: Mapping[str, DocTopicScores], topic: int,
                  genre: str | None = None) -> list[str]:
    """Document ids sorted by (topic score desc, id asc); optionally one genre."""
    docs = [d for d in corpus if (genre is None or d.genre == genre) and d.id in scores]
    return [d.id for d in sorted(docs, key=lambda d: (-float(scores[d.id].theta[topic]), d.id))]


def build_transfer_split(corpus: Corpus, scores: Mapping[str, DocTopicScores],
                         spec: SplitSpec, model: TopicModel) -> TransferSplit:
    """Slice each genre's ranking into the four partitions.

    on_test takes the top n_test scores, on_train the next n_train; off_train
    and off_val are taken from the bottom of the ranking. The capacity
    precondition (ids >= n_test + n_train + n_train + n_val per genre)
    guarantees the slices never overlap.
    """
    if not 0 <= spec.topic < model.k:
        raise ConfigError(f"topic index {spec.topic} out of range [0, {model.k})")
    need = spec.n_test + spec.n_train + spec.n_train + spec.n_val
    on_train: dict[str, tuple[str, ...]] = {}
    off_train: dict[str, tuple[str, ...]] = {}
    off_val: dict[str, tuple[str, ...]] = {}
    on_test: dict[str, tuple[str, ...]] = {}
    for genre in sorted(corpus.genres):
        ranked = rank_by_topic(corpus, scores, spec.topic, genre)
        if len(ranked) < need:
            raise SplitError(f"genre {genre!r} has {len(ranked)} scorable documents, "
                             f"needs {need} (short by {need - len(ranked)})")
        on_test[genre] = tuple(ranked[:spec.n_test])
        on_train[genre] = tuple(ranked[spec.n_test:spec.n_test + spec.n_train])
        tail = ranked[::-1]  # ascending scores, id-descending within ties
        off_train[genre] = tuple(tail[:spec.n_train])
        off_val[genre] = tuple(tail[spec.n_train:spec.n_train + spec.n_val])
    return TransferSplit(spec=spec, model_hash=model.content_hash(),
                         on_train=on_train, off_train=off_train,
                         off_val=off_val, on_test=on_test)


def carve_on_validation(corpus: Corpus, scores: Mapping[str, DocTopicScores],
                        split: TransferSplit, per_genre: int) -> dict[str, tuple[str, ...]]:
    """On-topic validation ids: the next-highest scorers after on_train.

    Only the on-topic ceiling condition needs this; the transfer conditions
    validate off-topic. Disjoint from all four split partitions.
    """
    taken = split.all_ids()
    out: dict[str, tuple[str, ...]] = {}
    for genre in split.genres():
        ranked = [i for i in rank_by_topic(corpus, scores, split.spec.topic, genre)
                  if i not in taken]
        if len(ranked) < per_genre:
            raise SplitError(f"genre {genre!r}: only {len(ranked)} documents left for "
                             f"on-topic validation, need {per_genre}")
        out[genre] = tuple(ranked[:per_genre])
    return out


def select_keyword_pool(corpus: Corpus, scores: Mapping[str, DocTopicScores],
                        split: TransferSplit, size: int, on_topic: bool,
                        include_test: bool = False,
                        exclude: set[str] | None = None,
                        seed: int = 0) -> tuple[str, ...]:
    """Document ids whose keywords condition the generators.

    on_topic=True picks the highest-scoring held-out documents (genre labels
    are ignored downstream). on_topic=False picks a seeded random sample from
    the off-topic half of the ranking, mirroring the control condition's
    randomly selected off-topic sources. include_test=True additionally admits
    on_test documents, matching the original protocol at the cost of
    provenance leakage into evaluation.
    """
    taken = split.all_ids()
    if include_test:
        taken -= {i for ids in split.on_test.values() for i in ids}
    if exclude:
        taken |= exclude
    ranked = rank_by_topic(corpus, scores, split.spec.topic)
    if on_topic:
        pool = [i for i in ranked if i not in taken][:size]
    else:
        bottom = [i for i in ranked[len(ranked) // 2:] if i not in taken]
        rng = DetRng(derive_seed(seed, "off_pool", split.spec.topic))
        rng.shuffle(bottom)
        pool = bottom[:size]
    if len(pool) < size:
        raise SplitError(f"keyword pool short: {len(pool)} of {size} documents available")
    return tuple(pool)


def emit_split(split: TransferSplit, corpus: Corpus, out_dir: str) -> str:
    """Write the four partition files plus a manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    counts = {}
    for name in PARTITIONS:
        rows = []
        for genre in split.genres():
            for doc_id in split.partition(name)[genre]:
                doc = corpus.by_id[doc_id]
                rows.append({"id": doc.id, "genre": doc.genre, "text": doc.raw_text})
        path = os.path.join(out_dir, f"{name}.jsonl")
        write_jsonl(path, rows)
        files[name] = f"{name}.jsonl"
        counts[name] = len(rows)
    manifest = {"kind": "transfer_split", "spec": split.spec.to_dict(),
                "model_hash": split.model_hash, "counts": counts, "files": files,
                "partitions": {name: {g: list(ids) for g, ids in split.partition(name).items()}
                               for name in PARTITIONS}}
    manifest["manifest_hash"] = sha256_hex(canonical_dumps(manifest))
    path = os.path.join(out_dir, "split_manifest.json")
    atomic_write_json(path, manifest)
    return path


def load_split(manifest_path: str) -> TransferSplit:
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    spec = SplitSpec(**manifest["spec"])
    parts = {name: {g: tuple(ids) for g, ids in manifest["partitions"][name].items()}
             for name in PARTITIONS}
    return TransferSplit(spec=spec, model_hash=manifest["model_hash"], **parts)
