"""Macro-F1, paired significance testing, the four-condition transfer
report, and the keyword/mixing ablation sweeps.

This module never imports the classifier at module scope; the runner pulls
it in lazily so the metric functions stay dependency-light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import t as t_distribution

from .augment import (AugmentationPlan, GeneratorHandle, build_synthetic_set, mix,
                      require_genre_cover, shuffle_labels, train_builtin_generator)
from .corpus import ConfigError, Corpus, Document, sample_window
from .rng import DetRng, derive_seed
from .splits import (SplitSpec, TransferSplit, build_transfer_split, carve_on_validation,
                     select_keyword_pool)
from .topics import DocTopicScores, TopicModel


class EvaluationError(Exception):
    """Inconsistent evaluation inputs."""


CONDITIONS = ("on_topic", "off_topic", "aug_baseline", "aug_adapt",
              "shuffled", "synthetic_only")


def macro_f1(predictions: Sequence[str], gold: Sequence[str],
             genres: Sequence[str]) -> float:
    """Unweighted mean over genres of per-genre F1 = 2PR/(P+R).

    A genre with no predicted and no gold positives contributes F1 = 0.
    """
    if len(predictions) != len(gold):
        raise EvaluationError(f"length mismatch: {len(predictions)} predictions, "
                              f"{len(gold)} gold labels")
    genre_set = set(genres)
    for label in gold:
        if label not in genre_set:
            raise EvaluationError(f"gold label {label!r} not in genre set")
    total = 0.0
    for genre in genres:
        tp = sum(1 for p, g in zip(predictions, gold) if p == genre and g == genre)
        fp = sum(1 for p, g in zip(predictions, gold) if p == genre and g != genre)
        fn = sum(1 for p, g in zip(predictions, gold) if p != genre and g == genre)
        if tp == 0:
            f1 = 0.0
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            f1 = 2.0 * precision * recall / (precision + recall)
        total += f1
    return total / len(genres)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    degenerate: bool = False   # zero-variance nonzero-mean differences


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Standard paired t on differences, two-sided p with n-1 degrees of freedom."""
    if len(a) != len(b):
        raise EvaluationError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise EvaluationError("paired t-test needs at least 2 pairs")
    diffs = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0, df=df)
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0, df=df, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(t_distribution.sf(abs(t), df))
    return TTestResult(t=t, p=p, df=df)


@dataclass(frozen=True)
class ConditionResult:
    topic: int
    n_train: int
    condition: str
    seed_index: int
    macro_f1: float
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.macro_f1 <= 1.0:
            raise EvaluationError(f"macro_f1 {self.macro_f1} outside [0, 1]")

    def key(self) -> tuple:
        return (self.topic, self.n_train, self.condition, self.seed_index)


@dataclass(frozen=True)
class ExperimentReport:
    """All condition results of one run plus its comparison machinery."""

    results: tuple[ConditionResult, ...]
    root_seed: int
    model_hash: str

    def select(self, condition: str, n_train: int | None = None) -> list[ConditionResult]:
        return [r for r in self.results
                if r.condition == condition and (n_train is None or r.n_train == n_train)]

    def condition_mean(self, condition: str, n_train: int | None = None) -> float:
        cells = self.select(condition, n_train)
        if not cells:
            raise EvaluationError(f"no cells for condition {condition!r}")
        return float(np.mean([r.macro_f1 for r in cells]))

    def per_topic_means(self, condition: str, n_train: int | None = None) -> dict[int, float]:
        """Topic -> mean macro-F1 over seeds (and N when not fixed)."""
        cells = self.select(condition, n_train)
        by_topic: dict[int, list[float]] = {}
        for r in cells:
            by_topic.setdefault(r.topic, []).append(r.macro_f1)
        return {t: float(np.mean(v)) for t, v in sorted(by_topic.items())}

    def compare(self, condition_a: str, condition_b: str,
                n_train: int | None = None) -> TTestResult:
        """Paired t-test over per-topic mean scores of two conditions."""
        means_a = self.per_topic_means(condition_a, n_train)
        means_b = self.per_topic_means(condition_b, n_train)
        topics = sorted(set(means_a) & set(means_b))
        if len(topics) < 2:
            raise EvaluationError("need at least 2 shared topics to compare conditions")
        return paired_t_test([means_a[t] for t in topics], [means_b[t] for t in topics])

    def to_csv(self) -> str:
        lines = ["topic,n_train,condition,seed_index,macro_f1"]
        for r in sorted(self.results, key=ConditionResult.key):
            lines.append(f"{r.topic},{r.n_train},{r.condition},{r.seed_index},{r.macro_f1!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        conditions = sorted({r.condition for r in self.results})
        summary = {}
        for cond in conditions:
            summary[cond] = {"mean": self.condition_mean(cond),
                             "per_topic": {str(t): v for t, v in
                                           self.per_topic_means(cond).items()}}
        tests = {}
        for a, b in (("on_topic", "off_topic"), ("aug_adapt", "off_topic"),
                     ("aug_adapt", "aug_baseline"), ("shuffled", "off_topic")):
            if a in conditions and b in conditions:
                res = self.compare(a, b)
                tests[f"{a}_vs_{b}"] = {"t": res.t, "p": res.p, "df": res.df,
                                        "degenerate": res.degenerate}
        return {"kind": "experiment_report", "root_seed": self.root_seed,
                "model_hash": self.model_hash,
                "cells": [{"topic": r.topic, "n_train": r.n_train,
                           "condition": r.condition, "seed_index": r.seed_index,
                           "macro_f1": r.macro_f1,
                           "provenance": dict(r.provenance)}
                          for r in sorted(self.results, key=ConditionResult.key)],
                "summary": summary, "paired_t_tests": tests}


@dataclass(frozen=True)
class RunSettings:
    """Everything a transfer experiment needs beyond corpus+model."""

    topics: tuple[int, ...]
    n_train: tuple[int, ...] = (40,)
    n_val: int = 40
    n_test: int = 75
    on_val_per_genre: int = 40
    pool_size: int = 40
    conditions: tuple[str, ...] = ("on_topic", "off_topic", "aug_baseline", "aug_adapt")
    n_seeds: int = 5
    root_seed: int = 0
    synthetic_ratio: float = 1.0      # synthetic per genre = ratio * n_train
    keyword_m: int | None = 10
    generator_order: int = 2
    generator_boost: float = 20.0
    generator_smoothing: float = 0.25
    generator_length: int = 150
    generator_backend: str = "builtin"   # "external" routes through the adapter
    fold_in_sweeps: int = 30
    classifier: Mapping[str, object] = field(default_factory=dict)
    pool_includes_test: bool = False  # original-protocol flag: keywords from test docs

    def __post_init__(self):
        if not self.topics:
            raise ConfigError("at least one topic required")
        if not self.n_train:
            raise ConfigError("at least one training size required")
        for cond in self.conditions:
            if cond not in CONDITIONS:
                raise ConfigError(f"unknown condition {cond!r}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")


@dataclass
class CellContext:
    """Shared artifacts of one (topic, N) cell: split, pools, generators."""

    topic: int
    n_train: int
    split: TransferSplit
    on_val: Mapping[str, tuple[str, ...]]
    adapt_pool: tuple[str, ...]
    baseline_pool: tuple[str, ...]
    generators: Mapping[str, GeneratorHandle]


class ExperimentRunner:
    """Builds cells and runs conditions against one corpus + topic model."""

    def __init__(self, corpus: Corpus, model: TopicModel,
                 scores: Mapping[str, DocTopicScores], settings: RunSettings):
        self.corpus = corpus
        self.model = model
        self.scores = scores
        self.settings = settings
        self._cells: dict[tuple[int, int], CellContext] = {}

    def cell(self, topic: int, n_train: int) -> CellContext:
        key = (topic, n_train)
        if key not in self._cells:
            s = self.settings
            spec = SplitSpec(topic=topic, n_train=n_train, n_val=s.n_val,
                             n_test=s.n_test, seed=s.root_seed)
            split = build_transfer_split(self.corpus, self.scores, spec, self.model)
            on_val = carve_on_validation(self.corpus, self.scores, split, s.on_val_per_genre)
            carved = {i for ids in on_val.values() for i in ids}
            adapt_pool = select_keyword_pool(self.corpus, self.scores, split, s.pool_size,
                                             on_topic=True, include_test=s.pool_includes_test,
                                             exclude=carved)
            baseline_pool = select_keyword_pool(self.corpus, self.scores, split,
                                                s.pool_size, on_topic=False, exclude=carved,
                                                seed=derive_seed(s.root_seed, "pool", topic, n_train))
            generators = {}
            if s.generator_backend == "external":
                from .adapter import AdapterClient
                from .augment import external_generator
                client = AdapterClient()
                for genre in split.genres():
                    generators[genre] = external_generator(genre, client,
                                                           length=s.generator_length)
            else:
                for genre in split.genres():
                    docs = [self.corpus.by_id[i] for i in split.off_train[genre]]
                    generators[genre] = train_builtin_generator(
                        docs, self.model, order=s.generator_order, seed=s.root_seed,
                        smoothing=s.generator_smoothing, boost=s.generator_boost,
                        length=s.generator_length)
            self._cells[key] = CellContext(topic=topic, n_train=n_train, split=split,
                                           on_val=on_val, adapt_pool=adapt_pool,
                                           baseline_pool=baseline_pool,
                                           generators=generators)
        return self._cells[key]

    def _docs(self, id_map: Mapping[str, tuple[str, ...]]) -> list[Document]:
        return [self.corpus.by_id[i] for g in sorted(id_map) for i in id_map[g]]

    def _plan(self, condition: str, cell: CellContext) -> AugmentationPlan:
        n_syn = int(round(self.settings.synthetic_ratio * cell.n_train))
        if condition == "on_topic" or condition == "off_topic":
            return AugmentationPlan(n_original=cell.n_train, n_synthetic=0,
                                    mode="adapt", keyword_pool=())
        if condition == "aug_adapt":
            return AugmentationPlan(n_original=cell.n_train, n_synthetic=n_syn,
                                    mode="adapt", keyword_pool=cell.adapt_pool)
        if condition == "aug_baseline":
            return AugmentationPlan(n_original=cell.n_train, n_synthetic=n_syn,
                                    mode="baseline", keyword_pool=cell.baseline_pool)
        if condition == "shuffled":
            return AugmentationPlan(n_original=cell.n_train, n_synthetic=n_syn,
                                    mode="shuffled", keyword_pool=cell.adapt_pool)
        if condition == "synthetic_only":
            return AugmentationPlan(n_original=0, n_synthetic=n_syn,
                                    mode="synthetic_only", keyword_pool=cell.adapt_pool)
        raise ConfigError(f"unknown condition {condition!r}")

    def run_condition(self, topic: int, n_train: int, condition: str, seed_index: int,
                      plan: AugmentationPlan | None = None,
                      keyword_m: int | None | str = "default") -> ConditionResult:
        """Train the condition's classifier and score it on the on-topic test set."""
        from .classify import TrainConfig, predict_batch, train_classifier

        s = self.settings
        cell = self.cell(topic, n_train)
        if plan is None:
            plan = self._plan(condition, cell)
        m = s.keyword_m if keyword_m == "default" else keyword_m
        cell_seed = derive_seed(s.root_seed, "cell", topic, n_train, condition,
                                seed_index, "m", m, "plan", plan.n_original,
                                plan.n_synthetic)

        leak = set(plan.keyword_pool) & {i for ids in cell.split.on_test.values() for i in ids}
        if leak and not s.pool_includes_test:
            raise EvaluationError(f"keyword pool leaks into the test set: {sorted(leak)[:3]}")

        if condition == "on_topic":
            train_docs = self._docs(cell.split.on_train)
            val_docs = self._docs(cell.on_val)
        else:
            originals = self._docs(cell.split.off_train)
            val_docs = self._docs(cell.split.off_val)
            if plan.n_synthetic > 0:
                require_genre_cover(cell.generators, cell.split.genres())
                pool_docs = [self.corpus.by_id[i] for i in plan.keyword_pool]
                synthetic = build_synthetic_set(
                    cell.generators, pool_docs, self.model,
                    per_genre=plan.n_synthetic, seed=derive_seed(cell_seed, "synthetic"),
                    scores=self.scores, m=m, length=s.generator_length,
                    boost=s.generator_boost, fold_in_sweeps=s.fold_in_sweeps)
                if plan.mode == "shuffled":
                    synthetic = shuffle_labels(synthetic, derive_seed(cell_seed, "relabel"))
            else:
                synthetic = []
            train_docs = mix(originals, synthetic, plan, derive_seed(cell_seed, "mix"))

        clf_options = dict(s.classifier)
        backend = clf_options.pop("backend", "builtin")
        test_docs = self._docs(cell.split.on_test)
        provenance = {"cell_seed": cell_seed, "model_hash": self.model.content_hash(),
                      "mode": plan.mode, "n_original": plan.n_original,
                      "n_synthetic": plan.n_synthetic, "keyword_m": m,
                      "backend": backend}

        if backend == "external":
            window = int(clf_options.pop("window", 1000))
            test_rng = DetRng(derive_seed(cell_seed, "test_windows"))
            windows = [sample_window(d, window, test_rng) for d in test_docs]
            predictions = self._run_external(train_docs, val_docs, windows,
                                             clf_options, cell_seed, provenance)
        else:
            config = TrainConfig(seed=derive_seed(cell_seed, "classifier"), **clf_options)
            clf = train_classifier(train_docs, val_docs, self.model.vocabulary, config)
            test_rng = DetRng(derive_seed(cell_seed, "test_windows"))
            predictions = predict_batch(clf, [sample_window(d, config.window, test_rng)
                                              for d in test_docs])
            provenance.update(best_epoch=clf.best_epoch, best_val_f1=clf.best_val_f1)

        score = macro_f1(predictions, [d.genre for d in test_docs], cell.split.genres())
        return ConditionResult(
            topic=topic, n_train=n_train, condition=condition, seed_index=seed_index,
            macro_f1=score, provenance=provenance)

    def _run_external(self, train_docs, val_docs, test_windows, options, cell_seed,
                      provenance) -> list[str]:
        """Train and predict through the child-process adapter protocol."""
        import tempfile

        from .adapter import AdapterClient
        from .manifest import write_jsonl

        with tempfile.TemporaryDirectory(prefix="genregap-adapter-") as workdir:
            train_path = f"{workdir}/train.jsonl"
            val_path = f"{workdir}/val.jsonl"
            write_jsonl(train_path, [{"id": d.id, "genre": d.genre, "text": d.raw_text}
                                     for d in train_docs])
            write_jsonl(val_path, [{"id": d.id, "genre": d.genre, "text": d.raw_text}
                                   for d in val_docs])
            with AdapterClient(options.pop("command", None)) as client:
                info = client.train("classifier", train_path=train_path, val_path=val_path,
                                    config={**options, "seed": derive_seed(cell_seed, "classifier")})
                provenance.update(adapter=client.capabilities.get("model", "unknown"),
                                  adapter_train=info)
                return client.predict(test_windows)

    def cell_jobs(self) -> list[tuple[int, int, str, int]]:
        s = self.settings
        return [(topic, n, cond, seed_ix)
                for topic in s.topics for n in s.n_train
                for cond in s.conditions for seed_ix in range(s.n_seeds)]

    def run(self) -> ExperimentReport:
        results = [self.run_condition(*job) for job in self.cell_jobs()]
        return ExperimentReport(results=tuple(results), root_seed=self.settings.root_seed,
                                model_hash=self.model.content_hash())


def run_experiment(corpus: Corpus, model: TopicModel,
                   scores: Mapping[str, DocTopicScores],
                   settings: RunSettings) -> ExperimentReport:
    return ExperimentRunner(corpus, model, scores, settings).run()


def keyword_sweep(runner: ExperimentRunner, m_values: Sequence[int | None],
                  n_train: int | None = None) -> list[dict]:
    """Mean aug-adapt F1 for each keyword count m, everything else fixed.

    m=None means every distinct in-vocabulary word is kept.
    """
    s = runner.settings
    sizes = [n_train] if n_train is not None else list(s.n_train)
    rows = []
    for m in m_values:
        if m is not None and m < 1:
            raise ConfigError(f"keyword count must be >= 1 or None, got {m}")
        scores = []
        cells = []
        for n in sizes:
            for topic in s.topics:
                for seed_ix in range(s.n_seeds):
                    res = runner.run_condition(topic, n, "aug_adapt", seed_ix, keyword_m=m)
                    scores.append(res.macro_f1)
                    cells.append(res)
        rows.append({"m": m, "mean_f1": float(np.mean(scores)),
                     "cells": [c.key() + (c.macro_f1,) for c in cells]})
    return rows


def mix_sweep(runner: ExperimentRunner, grid: Sequence[tuple[int, int]],
              include_shuffled: bool = True, n_train: int | None = None) -> list[dict]:
    """Mean F1 over (n_original, n_synthetic) mixing cells, plus shuffled rows.

    All rows share one (topic, N) cell per topic so that only the mixing plan
    varies; n_original may not exceed the cell's training capacity. A (n, 0)
    row equals the off-topic baseline; (0, x) rows are synthetic-only.
    """
    s = runner.settings
    base_n = n_train if n_train is not None else max(s.n_train)
    jobs: list[tuple[int, int, str]] = [(o, syn, "plain") for o, syn in grid]
    if include_shuffled:
        jobs.extend((o, syn, "shuffled") for o, syn in grid if o > 0 and syn > 0)
    rows = []
    for n_original, n_synthetic, kind in jobs:
        if n_original > base_n:
            raise ConfigError(f"n_original {n_original} exceeds cell capacity {base_n}")
        scores = []
        for topic in s.topics:
            for seed_ix in range(s.n_seeds):
                cell = runner.cell(topic, base_n)
                if kind == "shuffled":
                    condition, mode, pool = "shuffled", "shuffled", cell.adapt_pool
                elif n_synthetic == 0:
                    condition, mode, pool = "off_topic", "adapt", ()
                elif n_original == 0:
                    condition, mode, pool = "synthetic_only", "synthetic_only", cell.adapt_pool
                else:
                    condition, mode, pool = "aug_adapt", "adapt", cell.adapt_pool
                plan = AugmentationPlan(n_original=n_original, n_synthetic=n_synthetic,
                                        mode=mode, keyword_pool=pool)
                res = runner.run_condition(topic, base_n, condition, seed_ix, plan=plan)
                scores.append(res.macro_f1)
        rows.append({"n_original": n_original, "n_synthetic": n_synthetic,
                     "shuffled": kind == "shuffled", "mean_f1": float(np.mean(scores))})
    return rows
