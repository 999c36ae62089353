"""Command-line entry point: runs each pipeline stage and the full
experiment grid from a declarative JSON configuration.

All randomness flows from one root seed, expanded deterministically per
artifact and per cell, so a rerun with the same config and seed reproduces
every output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .corpus import ConfigError, Corpus, CorpusError, build_vocabulary, emit, ingest
from .evaluate import (CONDITIONS, EvaluationError, ExperimentReport, ExperimentRunner,
                       RunSettings, keyword_sweep, mix_sweep)
from .keywords import extract_keywords
from .manifest import atomic_write_json, atomic_write_text, canonical_dumps, write_jsonl
from .rng import derive_seed
from .splits import (SplitError, SplitSpec, build_transfer_split, emit_split, load_split,
                     score_corpus, select_keyword_pool)
from .synthkit import PlantedSpec, make_biased_corpus
from .topics import (DocTopicScores, TopicModel, TopicModelError, load_model, save_model,
                     select_topic_count, train_lda)

USER_ERRORS = (ConfigError, CorpusError, TopicModelError, SplitError, EvaluationError,
               FileNotFoundError, KeyError, ValueError)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a full transfer experiment."""

    corpus: str | None = None
    planted: Mapping[str, object] | None = None
    vocabulary: Mapping[str, object] = field(default_factory=dict)
    topic_model: Mapping[str, object] = field(default_factory=dict)
    scoring: Mapping[str, object] = field(default_factory=dict)
    split: Mapping[str, object] = field(default_factory=dict)
    augment: Mapping[str, object] = field(default_factory=dict)
    classifier: Mapping[str, object] = field(default_factory=dict)
    conditions: Sequence[str] = ("on_topic", "off_topic", "aug_baseline", "aug_adapt")
    seeds: int = 5
    seed: int = 0

    @staticmethod
    def load(path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        return ExperimentConfig(**raw)


def _load_corpus(config: ExperimentConfig, seed: int) -> Corpus:
    if config.corpus:
        return ingest(config.corpus)
    spec = PlantedSpec(**{"seed": derive_seed(seed, "planted"), **(config.planted or {})})
    corpus, _ = make_biased_corpus(spec)
    return corpus


def _scores_to_dict(scores, unscorable, fold_in_sweeps, seed, model) -> dict:
    return {"kind": "doc_topic_scores", "fold_in_sweeps": fold_in_sweeps, "seed": seed,
            "model_hash": model.content_hash(),
            "scores": {doc_id: [float(x) for x in s.theta] for doc_id, s in scores.items()},
            "unscorable": list(unscorable)}


def _scores_from_file(path: str) -> dict[str, DocTopicScores]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return {doc_id: DocTopicScores(theta=np.array(theta, dtype=np.float64))
            for doc_id, theta in payload["scores"].items()}


def _build_runner(config: ExperimentConfig, out_dir: str, seed: int,
                  echo=print) -> ExperimentRunner:
    corpus = _load_corpus(config, seed)
    vocab = build_vocabulary(corpus, **{"min_count": 2, **dict(config.vocabulary)})
    tm = {"k": 8, "sweeps": 150, **dict(config.topic_model)}
    candidates = tm.pop("candidates", None)
    if candidates:
        selection = select_topic_count(corpus, vocab, candidates,
                                       seed=derive_seed(seed, "select_k"),
                                       sweeps=tm.get("sweeps", 150))
        tm["k"] = selection.chosen_k
        atomic_write_json(os.path.join(out_dir, "topic_count_selection.json"),
                          {"chosen_k": selection.chosen_k, "table": list(selection.table)})
    model = train_lda(corpus, vocab, tm["k"], hyper_alpha=tm.get("alpha"),
                      hyper_beta=tm.get("beta", 0.01), sweeps=tm["sweeps"],
                      seed=derive_seed(seed, "lda"))
    save_model(model, os.path.join(out_dir, "topic_model.json"))
    fold_in = int(dict(config.scoring).get("fold_in_sweeps", 30))
    scores, unscorable = score_corpus(corpus, model, fold_in_sweeps=fold_in,
                                      seed=derive_seed(seed, "scoring"))
    atomic_write_json(os.path.join(out_dir, "doc_scores.json"),
                      _scores_to_dict(scores, unscorable, fold_in,
                                      derive_seed(seed, "scoring"), model))
    echo(f"corpus: {len(corpus)} docs, {len(corpus.genres)} genres; "
         f"model: k={model.k}, v={model.v}")

    split_cfg = dict(config.split)
    topics = split_cfg.pop("topics", "all")
    if topics == "all":
        topics = tuple(range(model.k))
    n_train = split_cfg.pop("n_train", [40])
    if isinstance(n_train, int):
        n_train = [n_train]
    settings = RunSettings(
        topics=tuple(topics), n_train=tuple(n_train),
        n_val=int(split_cfg.get("n_val", 40)), n_test=int(split_cfg.get("n_test", 75)),
        on_val_per_genre=int(split_cfg.get("on_val_per_genre", 40)),
        pool_size=int(split_cfg.get("pool_size", 40)),
        conditions=tuple(config.conditions), n_seeds=int(config.seeds), root_seed=seed,
        synthetic_ratio=float(dict(config.augment).get("ratio", 1.0)),
        keyword_m=dict(config.augment).get("m", 10),
        generator_order=int(dict(config.augment).get("order", 2)),
        generator_boost=float(dict(config.augment).get("boost", 20.0)),
        generator_smoothing=float(dict(config.augment).get("smoothing", 0.25)),
        generator_length=int(dict(config.augment).get("length", 150)),
        generator_backend=str(dict(config.augment).get("backend", "builtin")),
        fold_in_sweeps=fold_in,
        classifier=dict(config.classifier),
        pool_includes_test=bool(dict(config.augment).get("pool_includes_test", False)))
    return ExperimentRunner(corpus, model, scores, settings)


def _run_jobs(runner: ExperimentRunner, jobs, jobs_n: int, fail_fast: bool, echo=print):
    """Run cells, optionally in a process pool; returns (results, errors)."""
    results, errors = [], []
    if jobs_n > 1:
        import concurrent.futures as cf
        global _POOL_RUNNER
        _POOL_RUNNER = runner
        with cf.ProcessPoolExecutor(max_workers=jobs_n) as pool:
            futures = {pool.submit(_pool_cell, job): job for job in jobs}
            for fut in cf.as_completed(futures):
                job = futures[fut]
                try:
                    results.append(fut.result())
                except Exception as exc:
                    errors.append({"cell": list(job), "error": str(exc)})
                    if fail_fast:
                        raise
    else:
        for job in jobs:
            try:
                results.append(runner.run_condition(*job))
            except Exception as exc:
                if fail_fast:
                    raise
                errors.append({"cell": list(job), "error": str(exc)})
    for err in errors:
        echo(f"cell failed: {err['cell']}: {err['error']}", file=sys.stderr)
    return results, errors


_POOL_RUNNER: ExperimentRunner | None = None


def _pool_cell(job):
    return _POOL_RUNNER.run_condition(*job)


def cmd_synthkit_make(args) -> int:
    overrides = json.loads(args.spec) if args.spec else {}
    spec = PlantedSpec(**{"seed": args.seed, **overrides})
    corpus, truth = make_biased_corpus(spec)
    emit(corpus, args.out)
    if args.truth:
        truth.save(args.truth)
    print(f"wrote {len(corpus)} documents to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    corpus = ingest(args.corpus)
    per_genre = {g: sum(1 for d in corpus if d.genre == g) for g in corpus.genre_list}
    summary = {"kind": "corpus_summary", "documents": len(corpus), "genres": per_genre}
    if args.out:
        atomic_write_json(args.out, summary)
    print(canonical_dumps(summary))
    return 0


def cmd_topics_train(args) -> int:
    corpus = ingest(args.corpus)
    vocab = build_vocabulary(corpus, min_count=args.min_count, stop_top_n=args.stop_top_n)
    model = train_lda(corpus, vocab, args.k, sweeps=args.sweeps, seed=args.seed)
    save_model(model, args.out)
    print(f"trained k={model.k} v={model.v} model -> {args.out}")
    return 0


def cmd_topics_select(args) -> int:
    corpus = ingest(args.corpus)
    vocab = build_vocabulary(corpus, min_count=args.min_count, stop_top_n=args.stop_top_n)
    candidates = [int(x) for x in args.candidates.split(",")]
    selection = select_topic_count(corpus, vocab, candidates, sweeps=args.sweeps,
                                   seed=args.seed)
    payload = {"chosen_k": selection.chosen_k, "table": list(selection.table)}
    if args.out:
        atomic_write_json(args.out, payload)
    print(canonical_dumps(payload))
    return 0


def cmd_topics_score(args) -> int:
    corpus = ingest(args.corpus)
    model = load_model(args.model)
    scores, unscorable = score_corpus(corpus, model, fold_in_sweeps=args.fold_in_sweeps,
                                      seed=args.seed)
    atomic_write_json(args.out, _scores_to_dict(scores, unscorable,
                                                args.fold_in_sweeps, args.seed, model))
    print(f"scored {len(scores)} documents ({len(unscorable)} unscorable) -> {args.out}")
    return 0


def cmd_split_build(args) -> int:
    corpus = ingest(args.corpus)
    model = load_model(args.model)
    scores = _scores_from_file(args.scores)
    spec = SplitSpec(topic=args.topic, n_train=args.n_train, n_val=args.n_val,
                     n_test=args.n_test, seed=args.seed)
    split = build_transfer_split(corpus, scores, spec, model)
    manifest = emit_split(split, corpus, args.out)
    print(f"split manifest -> {manifest}")
    return 0


def cmd_keywords_extract(args) -> int:
    corpus = ingest(args.corpus)
    model = load_model(args.model)
    scores = _scores_from_file(args.scores)
    if args.docs:
        doc_ids = args.docs.split(",")
    else:
        doc_ids = [d.id for d in corpus if d.id in scores]
    m = None if args.m == "all" else int(args.m)
    rows = []
    for doc_id in doc_ids:
        doc = corpus.by_id[doc_id]
        rows.append(extract_keywords(doc, model, scores[doc_id], m=m).to_dict())
    write_jsonl(args.out, rows)
    print(f"wrote {len(rows)} keyword sequences -> {args.out}")
    return 0


def cmd_augment_generate(args) -> int:
    from .augment import build_synthetic_set, train_builtin_generator

    corpus = ingest(args.corpus)
    model = load_model(args.model)
    scores = _scores_from_file(args.scores)
    split = load_split(os.path.join(args.split, "split_manifest.json"))
    pool_ids = select_keyword_pool(corpus, scores, split, args.pool_size,
                                   on_topic=args.mode == "adapt", seed=args.seed)
    generators = {}
    for genre in split.genres():
        docs = [corpus.by_id[i] for i in split.off_train[genre]]
        generators[genre] = train_builtin_generator(
            docs, model, order=args.order, smoothing=args.smoothing,
            boost=args.boost, length=args.length)
    m = None if args.m == "all" else int(args.m)
    synthetic = build_synthetic_set(generators, [corpus.by_id[i] for i in pool_ids],
                                    model, per_genre=args.per_genre, seed=args.seed,
                                    scores=scores, m=m, length=args.length,
                                    boost=args.boost)
    rows = [{"id": f"synthetic:{s.genre}:{i}", "genre": s.genre, "text": s.text,
             "keywords": list(s.keywords.tokens), "provenance": dict(s.provenance)}
            for i, s in enumerate(synthetic)]
    write_jsonl(args.out, rows)
    print(f"generated {len(rows)} synthetic documents -> {args.out}")
    return 0


def cmd_augment_mix(args) -> int:
    from .augment import AugmentationPlan, SyntheticDocument, mix, shuffle_labels
    from .keywords import KeywordSequence

    original = list(ingest(args.original))
    synthetic = []
    with open(args.synthetic, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            kw = KeywordSequence(tokens=tuple(row.get("keywords", [])),
                                 source_doc=str(row.get("provenance", {}).get(
                                     "keyword_source", "")),
                                 distinct_count=len(set(row.get("keywords", []))))
            synthetic.append(SyntheticDocument(genre=row["genre"], keywords=kw,
                                               text=row["text"],
                                               provenance=row.get("provenance", {})))
    if args.shuffle_labels:
        synthetic = shuffle_labels(synthetic, args.seed)
    plan = AugmentationPlan(n_original=args.n_original, n_synthetic=args.n_synthetic,
                            mode="shuffled" if args.shuffle_labels else "adapt")
    mixed = mix(original, synthetic, plan, args.seed)
    write_jsonl(args.out, [{"id": d.id, "genre": d.genre, "text": d.raw_text}
                           for d in mixed])
    print(f"mixed training set: {len(mixed)} documents -> {args.out}")
    return 0


def cmd_classify_train(args) -> int:
    from .classify import TrainConfig, save_classifier, train_classifier

    train_corpus = ingest(args.train)
    val_corpus = ingest(args.val)
    model = load_model(args.model)
    config = TrainConfig(learning_rate=args.learning_rate, l2=args.l2,
                         epochs=args.epochs, batch_size=args.batch_size,
                         window=args.window, seed=args.seed)
    clf = train_classifier(list(train_corpus), list(val_corpus),
                           model.vocabulary, config)
    save_classifier(clf, args.out)
    print(f"best epoch {clf.best_epoch} (val macro-F1 {clf.best_val_f1:.4f}) -> {args.out}")
    return 0


def cmd_classify_eval(args) -> int:
    from .classify import load_classifier, predict_batch
    from .corpus import sample_window
    from .evaluate import macro_f1
    from .rng import DetRng

    clf = load_classifier(args.model_file)
    test_corpus = ingest(args.test)
    rng = DetRng(derive_seed(args.seed, "eval_windows"))
    windows = [sample_window(d, clf.config.window, rng) for d in test_corpus]
    predictions = predict_batch(clf, windows)
    gold = [d.genre for d in test_corpus]
    score = macro_f1(predictions, gold, clf.genres)
    payload = {"kind": "classifier_eval", "macro_f1": score, "documents": len(gold)}
    if args.out:
        atomic_write_json(args.out, payload)
    print(canonical_dumps(payload))
    return 0


def _write_report(report: ExperimentReport, errors, out_dir: str) -> None:
    atomic_write_text(os.path.join(out_dir, "results.csv"), report.to_csv())
    payload = report.to_dict()
    payload["errors"] = errors
    atomic_write_json(os.path.join(out_dir, "report.json"), payload)


def cmd_report(args) -> int:
    config = ExperimentConfig.load(args.config)
    seed = config.seed if args.seed is None else args.seed
    os.makedirs(args.out, exist_ok=True)
    runner = _build_runner(config, args.out, seed)
    results, errors = _run_jobs(runner, runner.cell_jobs(), args.jobs, args.fail_fast)
    report = ExperimentReport(results=tuple(results), root_seed=seed,
                              model_hash=runner.model.content_hash())
    _write_report(report, errors, args.out)
    manifest = {"kind": "experiment_manifest", "config_path": os.path.abspath(args.config),
                "seed": seed, "model_hash": runner.model.content_hash(),
                "cells": len(results), "failed": len(errors)}
    atomic_write_json(os.path.join(args.out, "manifest.json"), manifest)
    for cond in runner.settings.conditions:
        print(f"{cond}: mean macro-F1 {report.condition_mean(cond):.4f}")
    return 0 if not errors else 1


def cmd_ablate_keywords(args) -> int:
    config = ExperimentConfig.load(args.config)
    seed = config.seed if args.seed is None else args.seed
    os.makedirs(args.out, exist_ok=True)
    runner = _build_runner(config, args.out, seed)
    m_values = [None if x == "all" else int(x) for x in args.m.split(",")]
    rows = keyword_sweep(runner, m_values)
    plot = [{"m": ("all" if r["m"] is None else r["m"]), "mean_f1": r["mean_f1"]}
            for r in rows]
    atomic_write_json(os.path.join(args.out, "keyword_sweep.json"), plot)
    atomic_write_text(os.path.join(args.out, "keyword_sweep.csv"),
                      "m,mean_f1\n" + "".join(f"{p['m']},{p['mean_f1']!r}\n" for p in plot))
    for p in plot:
        print(f"m={p['m']}: mean macro-F1 {p['mean_f1']:.4f}")
    return 0


def cmd_ablate_mix(args) -> int:
    config = ExperimentConfig.load(args.config)
    seed = config.seed if args.seed is None else args.seed
    os.makedirs(args.out, exist_ok=True)
    runner = _build_runner(config, args.out, seed)
    grid = []
    for pair in args.grid.split(","):
        orig, syn = pair.split(":")
        grid.append((int(orig), int(syn)))
    rows = mix_sweep(runner, grid, include_shuffled=not args.no_shuffled)
    atomic_write_json(os.path.join(args.out, "mix_sweep.json"), rows)
    atomic_write_text(os.path.join(args.out, "mix_sweep.csv"),
                      "n_original,n_synthetic,shuffled,mean_f1\n" + "".join(
                          f"{r['n_original']},{r['n_synthetic']},"
                          f"{int(r['shuffled'])},{r['mean_f1']!r}\n" for r in rows))
    for r in rows:
        label = " shuffled" if r["shuffled"] else ""
        print(f"{r['n_original']}+{r['n_synthetic']}{label}: "
              f"mean macro-F1 {r['mean_f1']:.4f}")
    return 0


def cmd_ablate_shuffle(args) -> int:
    config = ExperimentConfig.load(args.config)
    seed = config.seed if args.seed is None else args.seed
    os.makedirs(args.out, exist_ok=True)
    config = replace(config, conditions=("off_topic", "shuffled"))
    runner = _build_runner(config, args.out, seed)
    results, errors = _run_jobs(runner, runner.cell_jobs(), args.jobs, args.fail_fast)
    report = ExperimentReport(results=tuple(results), root_seed=seed,
                              model_hash=runner.model.content_hash())
    _write_report(report, errors, args.out)
    off = report.condition_mean("off_topic")
    shuffled = report.condition_mean("shuffled")
    print(f"off_topic {off:.4f} vs shuffled {shuffled:.4f} "
          f"(diff {100 * (shuffled - off):+.2f} points)")
    return 0 if not errors else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genregap",
                                     description="Topical domain-transfer gap toolkit")
    parser.add_argument("--version", action="version", version=f"genregap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthkit", help="planted-corpus generation")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    make = ssub.add_parser("make", help="generate a planted corpus")
    make.add_argument("--out", required=True)
    make.add_argument("--truth", help="write the planted-truth sidecar here")
    make.add_argument("--spec", help="JSON object of PlantedSpec overrides")
    make.add_argument("--seed", type=int, default=0)
    make.set_defaults(func=cmd_synthkit_make)

    p = sub.add_parser("ingest", help="validate a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("topics", help="topic model operations")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    tr = ssub.add_parser("train", help="train the built-in Gibbs model")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--k", type=int, required=True)
    tr.add_argument("--sweeps", type=int, default=500)
    tr.add_argument("--min-count", type=int, default=2)
    tr.add_argument("--stop-top-n", type=int, default=0)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_topics_train)
    sel = ssub.add_parser("select", help="pick K by coherence x diversity")
    sel.add_argument("--corpus", required=True)
    sel.add_argument("--candidates", required=True, help="comma-separated K values")
    sel.add_argument("--sweeps", type=int, default=200)
    sel.add_argument("--min-count", type=int, default=2)
    sel.add_argument("--stop-top-n", type=int, default=0)
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--out")
    sel.set_defaults(func=cmd_topics_select)
    sc = ssub.add_parser("score", help="fold-in score all documents")
    sc.add_argument("--corpus", required=True)
    sc.add_argument("--model", required=True)
    sc.add_argument("--fold-in-sweeps", type=int, default=50)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_topics_score)

    p = sub.add_parser("split", help="transfer split construction")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    sb = ssub.add_parser("build", help="build one (topic, N) transfer split")
    sb.add_argument("--corpus", required=True)
    sb.add_argument("--model", required=True)
    sb.add_argument("--scores", required=True)
    sb.add_argument("--topic", type=int, required=True)
    sb.add_argument("--n-train", type=int, required=True)
    sb.add_argument("--n-val", type=int, default=300)
    sb.add_argument("--n-test", type=int, default=300)
    sb.add_argument("--seed", type=int, default=0)
    sb.add_argument("--out", required=True)
    sb.set_defaults(func=cmd_split_build)

    p = sub.add_parser("keywords", help="keyword extraction")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    ke = ssub.add_parser("extract", help="extract keyword sequences")
    ke.add_argument("--corpus", required=True)
    ke.add_argument("--model", required=True)
    ke.add_argument("--scores", required=True)
    ke.add_argument("--docs", help="comma-separated document ids (default: all)")
    ke.add_argument("--m", default="10", help="keyword count, or 'all'")
    ke.add_argument("--out", required=True)
    ke.set_defaults(func=cmd_keywords_extract)

    p = sub.add_parser("augment", help="synthetic document generation and mixing")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    ag = ssub.add_parser("generate", help="generate a synthetic set from a split")
    ag.add_argument("--corpus", required=True)
    ag.add_argument("--model", required=True)
    ag.add_argument("--scores", required=True)
    ag.add_argument("--split", required=True, help="split directory")
    ag.add_argument("--mode", choices=("adapt", "baseline"), default="adapt")
    ag.add_argument("--per-genre", type=int, required=True)
    ag.add_argument("--pool-size", type=int, default=40)
    ag.add_argument("--m", default="10")
    ag.add_argument("--order", type=int, default=2)
    ag.add_argument("--boost", type=float, default=20.0)
    ag.add_argument("--smoothing", type=float, default=0.25)
    ag.add_argument("--length", type=int, default=150)
    ag.add_argument("--seed", type=int, default=0)
    ag.add_argument("--out", required=True)
    ag.set_defaults(func=cmd_augment_generate)
    am = ssub.add_parser("mix", help="mix original and synthetic training files")
    am.add_argument("--original", required=True)
    am.add_argument("--synthetic", required=True)
    am.add_argument("--n-original", type=int, required=True)
    am.add_argument("--n-synthetic", type=int, required=True)
    am.add_argument("--shuffle-labels", action="store_true")
    am.add_argument("--seed", type=int, default=0)
    am.add_argument("--out", required=True)
    am.set_defaults(func=cmd_augment_mix)

    p = sub.add_parser("classify", help="genre classifier operations")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    ct = ssub.add_parser("train", help="train the built-in classifier")
    ct.add_argument("--train", required=True)
    ct.add_argument("--val", required=True)
    ct.add_argument("--model", required=True, help="topic model file (shared vocabulary)")
    ct.add_argument("--learning-rate", type=float, default=2.0)
    ct.add_argument("--l2", type=float, default=1e-4)
    ct.add_argument("--epochs", type=int, default=60)
    ct.add_argument("--batch-size", type=int, default=32)
    ct.add_argument("--window", type=int, default=1000)
    ct.add_argument("--seed", type=int, default=0)
    ct.add_argument("--out", required=True)
    ct.set_defaults(func=cmd_classify_train)
    ce = ssub.add_parser("eval", help="evaluate a trained classifier")
    ce.add_argument("--model-file", required=True)
    ce.add_argument("--test", required=True)
    ce.add_argument("--seed", type=int, default=0)
    ce.add_argument("--out")
    ce.set_defaults(func=cmd_classify_eval)

    p = sub.add_parser("report", help="run the full experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fail-fast", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ablate", help="ablation sweeps")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    ak = ssub.add_parser("keywords", help="keyword-count sweep")
    ak.add_argument("--config", required=True)
    ak.add_argument("--m", required=True, help="comma-separated counts; 'all' allowed")
    ak.add_argument("--out", required=True)
    ak.add_argument("--seed", type=int, default=None)
    ak.set_defaults(func=cmd_ablate_keywords)
    amx = ssub.add_parser("mix", help="original:synthetic mixing sweep")
    amx.add_argument("--config", required=True)
    amx.add_argument("--grid", required=True, help="comma-separated orig:syn pairs")
    amx.add_argument("--no-shuffled", action="store_true")
    amx.add_argument("--out", required=True)
    amx.add_argument("--seed", type=int, default=None)
    amx.set_defaults(func=cmd_ablate_mix)
    ash = ssub.add_parser("shuffle", help="label-shuffle ablation")
    ash.add_argument("--config", required=True)
    ash.add_argument("--out", required=True)
    ash.add_argument("--seed", type=int, default=None)
    ash.add_argument("--jobs", type=int, default=1)
    ash.add_argument("--fail-fast", action="store_true")
    ash.set_defaults(func=cmd_ablate_shuffle)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
