import numpy as np
import pytest

from genregap.corpus import Corpus, Document
from genregap.rng import derive_seed
from genregap.splits import (PARTITIONS, SplitError, SplitSpec, build_transfer_split,
                             carve_on_validation, emit_split, load_split, rank_by_topic,
                             score_corpus, select_keyword_pool)
from genregap.topics import DocTopicScores, TopicModel, infer_doc_topics

from conftest import make_vocab, random_model


def scores_from(values: dict[str, list[float]]) -> dict[str, DocTopicScores]:
    return {doc_id: DocTopicScores(theta=np.array(v)) for doc_id, v in values.items()}


def grid_corpus(n_per_genre: int, genres=("news", "blog")) -> Corpus:
    docs = []
    for g in genres:
        for i in range(n_per_genre):
            docs.append(Document.make(f"{g}{i:03d}", g, f"text {g} {i}"))
    return Corpus.from_documents(docs)


def model_for_tests(k=2) -> TopicModel:
    rng = np.random.default_rng(0)
    return random_model(rng, k=k, words=["aa", "bb", "cc"])


class TestScoreCorpus:
    def test_single_doc(self, planted_pack):
        corpus = Corpus.from_documents([planted_pack["corpus"].documents[0]])
        scores, unscorable = score_corpus(corpus, planted_pack["model"], 10, seed=1)
        assert len(scores) == 1 and not unscorable

    def test_matches_per_document_calls(self, planted_pack):
        model = planted_pack["model"]
        corpus = Corpus.from_documents(planted_pack["corpus"].documents[:25])
        scores, _ = score_corpus(corpus, model, fold_in_sweeps=15, seed=42)
        for doc in corpus:
            expected = infer_doc_topics(model, doc, fold_in_sweeps=15,
                                        seed=derive_seed(42, "fold_in", doc.id))
            assert np.array_equal(scores[doc.id].theta, expected.theta)

    def test_deterministic(self, planted_pack):
        corpus = Corpus.from_documents(planted_pack["corpus"].documents[:10])
        a, _ = score_corpus(corpus, planted_pack["model"], 10, seed=3)
        b, _ = score_corpus(corpus, planted_pack["model"], 10, seed=3)
        assert all(np.array_equal(a[i].theta, b[i].theta) for i in a)

    def test_unscorable_listed(self, planted_pack):
        ghost = Document.make("ghost", "review", "qqqxyzzy")
        corpus = Corpus.from_documents(list(planted_pack["corpus"].documents[:3]) + [ghost])
        scores, unscorable = score_corpus(corpus, planted_pack["model"], 10, seed=3)
        assert unscorable == ["ghost"]
        assert "ghost" not in scores


class TestBuildTransferSplit:
    def test_forced_assignment_with_distinct_scores(self):
        corpus = grid_corpus(8)
        values = {}
        for g in ("news", "blog"):
            for i in range(8):
                p = (i + 1) / 10.0
                values[f"{g}{i:03d}"] = [p, 1.0 - p]
        scores = scores_from(values)
        spec = SplitSpec(topic=0, n_train=2, n_val=2, n_test=2)
        split = build_transfer_split(corpus, scores, spec, model_for_tests())
        # descending by theta[0]: 007, 006, ... per genre
        assert split.on_test["news"] == ("news007", "news006")
        assert split.on_train["news"] == ("news005", "news004")
        assert split.off_train["news"] == ("news000", "news001")
        assert split.off_val["news"] == ("news002", "news003")

    def test_all_equal_scores_ordered_by_id(self):
        corpus = grid_corpus(8)
        scores = scores_from({d.id: [0.5, 0.5] for d in corpus})
        spec = SplitSpec(topic=0, n_train=2, n_val=2, n_test=2)
        split = build_transfer_split(corpus, scores, spec, model_for_tests())
        assert split.on_test["blog"] == ("blog000", "blog001")
        assert split.on_train["blog"] == ("blog002", "blog003")
        # the off partitions fill from the other end of the id order
        assert split.off_train["blog"] == ("blog007", "blog006")
        assert split.off_val["blog"] == ("blog005", "blog004")

    def test_matches_sort_and_slice_oracle(self):
        rng = np.random.default_rng(9)
        genres = ("news", "blog", "wiki")
        docs = []
        values = {}
        for g in genres:
            for i in range(170):
                doc_id = f"{g}{i:03d}"
                docs.append(Document.make(doc_id, g, "body"))
                p = float(rng.uniform())
                values[doc_id] = [p, 1.0 - p]
        corpus = Corpus.from_documents(docs)
        scores = scores_from(values)
        spec = SplitSpec(topic=0, n_train=30, n_val=50, n_test=40)
        split = build_transfer_split(corpus, scores, spec, model_for_tests())
        for g in genres:
            ranked = sorted((d for d in corpus if d.genre == g),
                            key=lambda d: (-values[d.id][0], d.id))
            ids = [d.id for d in ranked]
            assert list(split.on_test[g]) == ids[:40]
            assert list(split.on_train[g]) == ids[40:70]
            assert list(split.off_train[g]) == ids[::-1][:30]
            assert list(split.off_val[g]) == ids[::-1][30:80]

    def test_capacity_error_names_genre_and_shortfall(self):
        corpus = grid_corpus(5)
        scores = scores_from({d.id: [0.5, 0.5] for d in corpus})
        spec = SplitSpec(topic=0, n_train=2, n_val=2, n_test=2)
        with pytest.raises(SplitError, match=r"news.*short by 3"):
            build_transfer_split(corpus, scores, spec, model_for_tests())

    def test_partitions_disjoint_and_balanced(self, planted_pack):
        spec = SplitSpec(topic=2, n_train=40, n_val=40, n_test=75)
        split = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                     spec, planted_pack["model"])
        seen: set[str] = set()
        for name in PARTITIONS:
            part = split.partition(name)
            counts = {g: len(ids) for g, ids in part.items()}
            assert len(set(counts.values())) == 1  # balanced across genres
            ids = {i for g_ids in part.values() for i in g_ids}
            assert not (ids & seen)  # pairwise disjoint
            seen |= ids

    def test_monotone_separation(self, planted_pack):
        scores = planted_pack["scores"]
        spec = SplitSpec(topic=1, n_train=40, n_val=40, n_test=75)
        split = build_transfer_split(planted_pack["corpus"], scores,
                                     spec, planted_pack["model"])
        for g in split.genres():
            lo_test = min(float(scores[i].theta[1]) for i in split.on_test[g])
            hi_off = max(float(scores[i].theta[1]) for i in split.off_train[g])
            assert lo_test >= hi_off

    def test_deterministic(self, planted_pack):
        spec = SplitSpec(topic=0, n_train=40, n_val=40, n_test=75)
        a = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                 spec, planted_pack["model"])
        b = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                 spec, planted_pack["model"])
        assert a == b


class TestPoolsAndCarve:
    def test_on_val_disjoint_from_split(self, planted_pack):
        spec = SplitSpec(topic=0, n_train=40, n_val=40, n_test=75)
        split = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                     spec, planted_pack["model"])
        on_val = carve_on_validation(planted_pack["corpus"], planted_pack["scores"],
                                     split, 40)
        carved = {i for ids in on_val.values() for i in ids}
        assert not (carved & split.all_ids())
        assert all(len(ids) == 40 for ids in on_val.values())

    def test_keyword_pools_disjoint_from_split_and_leakage_free(self, planted_pack):
        spec = SplitSpec(topic=0, n_train=40, n_val=40, n_test=75)
        split = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                     spec, planted_pack["model"])
        on_pool = select_keyword_pool(planted_pack["corpus"], planted_pack["scores"],
                                      split, 40, on_topic=True)
        off_pool = select_keyword_pool(planted_pack["corpus"], planted_pack["scores"],
                                       split, 40, on_topic=False, seed=5)
        taken = split.all_ids()
        assert not (set(on_pool) & taken)
        assert not (set(off_pool) & taken)
        scores = planted_pack["scores"]
        mean_on = np.mean([scores[i].theta[0] for i in on_pool])
        mean_off = np.mean([scores[i].theta[0] for i in off_pool])
        assert mean_on > mean_off

    def test_include_test_flag_admits_test_docs(self, planted_pack):
        spec = SplitSpec(topic=0, n_train=40, n_val=40, n_test=75)
        split = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                     spec, planted_pack["model"])
        pool = select_keyword_pool(planted_pack["corpus"], planted_pack["scores"],
                                   split, 40, on_topic=True, include_test=True)
        test_ids = {i for ids in split.on_test.values() for i in ids}
        assert set(pool) & test_ids


class TestEmitSplit:
    def test_round_trip(self, tmp_path, planted_pack):
        spec = SplitSpec(topic=3, n_train=40, n_val=40, n_test=75, seed=9)
        split = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                     spec, planted_pack["model"])
        manifest_path = emit_split(split, planted_pack["corpus"], str(tmp_path / "split"))
        redux = load_split(manifest_path)
        assert redux == split

    def test_row_counts_match_spec(self, tmp_path, planted_pack):
        spec = SplitSpec(topic=3, n_train=40, n_val=40, n_test=75)
        split = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                     spec, planted_pack["model"])
        out = tmp_path / "split"
        emit_split(split, planted_pack["corpus"], str(out))
        genres = len(split.genres())
        expected = {"on_train.jsonl": 40 * genres, "off_train.jsonl": 40 * genres,
                    "off_val.jsonl": 40 * genres, "on_test.jsonl": 75 * genres}
        for name, rows in expected.items():
            with open(out / name, encoding="utf-8") as fh:
                assert sum(1 for line in fh if line.strip()) == rows

    def test_manifest_hash_tracks_model(self, tmp_path, planted_pack):
        import json
        spec = SplitSpec(topic=0, n_train=40, n_val=40, n_test=75)
        split_a = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                       spec, planted_pack["model"])
        other_model = TopicModel(k=planted_pack["model"].k,
                                 vocabulary=planted_pack["model"].vocabulary,
                                 word_topic=planted_pack["model"].word_topic,
                                 hyper_alpha=planted_pack["model"].hyper_alpha,
                                 hyper_beta=0.5)
        split_b = build_transfer_split(planted_pack["corpus"], planted_pack["scores"],
                                       spec, other_model)
        pa = emit_split(split_a, planted_pack["corpus"], str(tmp_path / "a"))
        pb = emit_split(split_b, planted_pack["corpus"], str(tmp_path / "b"))
        with open(pa, encoding="utf-8") as fh:
            ha = json.load(fh)["manifest_hash"]
        with open(pb, encoding="utf-8") as fh:
            hb = json.load(fh)["manifest_hash"]
        assert ha != hb
