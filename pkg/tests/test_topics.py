import math
from itertools import combinations

import numpy as np
import pytest

from genregap.corpus import Corpus, Document, build_vocabulary
from genregap.synthkit import make_disjoint_topic_corpus
from genregap.topics import (DocTopicScores, EtmParameters, TopicModel, TopicModelError,
                             etm_word_topic, infer_doc_topics, load_model, model_from_etm,
                             save_model, select_topic_count, top_words, topic_coherence,
                             topic_diversity, train_lda)

from conftest import make_vocab, random_model


def unigram_corpus(texts, genre="g"):
    return Corpus.from_documents(
        [Document.make(f"d{i}", genre, t) for i, t in enumerate(texts)])


class TestTrainLda:
    def test_k1_is_smoothed_unigram(self):
        corpus = unigram_corpus(["aa aa bb", "aa cc cc cc"])
        vocab = build_vocabulary(corpus, min_count=1)
        beta = 0.01
        model = train_lda(corpus, vocab, k=1, hyper_beta=beta, sweeps=5, seed=0)
        counts = np.array([dict(zip(vocab.words, vocab.counts))[w] for w in vocab.words],
                          dtype=float)
        expected = (counts + beta) / (counts.sum() + len(vocab) * beta)
        assert np.max(np.abs(model.word_topic[0] - expected)) < 1e-9

    def test_planted_two_topics_recovered(self):
        corpus, (set_a, set_b) = make_disjoint_topic_corpus(n_docs=200, words_per_topic=20,
                                                            doc_length=120, seed=3)
        vocab = build_vocabulary(corpus, min_count=1)
        model = train_lda(corpus, vocab, k=2, sweeps=100, seed=1)
        tops = [set(top_words(model, t, 10)) for t in range(2)]
        planted = [set(set_a), set(set_b)]
        # majority matching: each learned topic pairs with its best planted set
        best = [max(range(2), key=lambda p: len(tops[t] & planted[p])) for t in range(2)]
        assert sorted(best) == [0, 1]
        for t in range(2):
            inter = tops[t] & planted[best[t]]
            union = tops[t] | planted[best[t]]
            # top-10 against a 20-word planted set: use overlap fraction of the list
            assert len(inter) / len(tops[t]) >= 0.8

    def test_deterministic_given_seed(self):
        corpus = unigram_corpus(["aa bb cc dd" * 5, "ee ff gg hh" * 5, "aa ff"])
        vocab = build_vocabulary(corpus, min_count=1)
        m1 = train_lda(corpus, vocab, k=3, sweeps=40, seed=9)
        m2 = train_lda(corpus, vocab, k=3, sweeps=40, seed=9)
        assert np.array_equal(m1.word_topic, m2.word_topic)

    def test_rows_are_simplices(self):
        corpus = unigram_corpus(["aa bb cc", "dd ee ff", "aa ff"])
        vocab = build_vocabulary(corpus, min_count=1)
        model = train_lda(corpus, vocab, k=4, sweeps=20, seed=2)
        sums = model.word_topic.sum(axis=1)
        assert np.max(np.abs(sums - 1.0)) < 1e-9
        assert model.word_topic.min() >= 0.0

    def test_all_docs_excluded_is_error(self):
        corpus = unigram_corpus(["aa bb"])
        other = unigram_corpus(["cc dd"])
        vocab = build_vocabulary(other, min_count=1)
        with pytest.raises(TopicModelError):
            train_lda(corpus, vocab, k=2, sweeps=5, seed=0)

    def test_empty_doc_excluded_with_warning(self, caplog):
        corpus = unigram_corpus(["aa bb aa", "zz yy", "aa bb"])
        vocab = build_vocabulary(unigram_corpus(["aa bb aa bb"]), min_count=1)
        with caplog.at_level("WARNING", logger="genregap.topics"):
            model = train_lda(corpus, vocab, k=1, sweeps=5, seed=0)
        assert "d1" in caplog.text
        assert model.k == 1

    def test_debug_mode_reconciles_counts(self):
        corpus = unigram_corpus(["aa bb cc dd ee", "ff gg hh aa bb"])
        vocab = build_vocabulary(corpus, min_count=1)
        model, state = train_lda(corpus, vocab, k=2, sweeps=10, seed=4, debug=True,
                                 return_state=True)
        state.check_consistency()
        # corrupt a count table and confirm the check trips
        state.nkw[0, 0] += 1
        with pytest.raises(TopicModelError):
            state.check_consistency()


class TestEtm:
    def test_zero_topic_embedding_gives_uniform_row(self):
        rng = np.random.default_rng(0)
        rho = rng.normal(size=(5, 3))
        alpha = np.vstack([np.zeros(3), rng.normal(size=3)])
        wt = etm_word_topic(EtmParameters(rho=rho, alpha=alpha))
        assert np.max(np.abs(wt[0] - 0.2)) < 1e-12

    def test_hand_computed_softmax(self):
        rho = np.array([[0.0], [math.log(2)], [math.log(4)]])
        alpha = np.array([[1.0]])
        wt = etm_word_topic(EtmParameters(rho=rho, alpha=alpha))
        assert np.max(np.abs(wt[0] - np.array([1, 2, 4]) / 7.0)) < 1e-12

    def test_shift_invariance(self):
        rng = np.random.default_rng(5)
        rho = rng.normal(size=(20, 4))
        alpha = rng.normal(size=(3, 4))
        base = etm_word_topic(EtmParameters(rho=rho, alpha=alpha))
        # shifting every logit of topic t by a constant: add c in the direction
        # recovered via an augmented embedding dimension
        rho_aug = np.hstack([rho, np.ones((20, 1))])
        alpha_aug = np.hstack([alpha, np.full((3, 1), 13.7)])
        shifted = etm_word_topic(EtmParameters(rho=rho_aug, alpha=alpha_aug))
        assert np.max(np.abs(base - shifted)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(TopicModelError, match="mismatch"):
            EtmParameters(rho=np.zeros((4, 3)), alpha=np.zeros((2, 2)))

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(6)
        wt = etm_word_topic(EtmParameters(rho=rng.normal(size=(50, 8)),
                                          alpha=rng.normal(size=(6, 8))))
        assert np.max(np.abs(wt.sum(axis=1) - 1.0)) < 1e-9

    def test_model_from_etm_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        vocab = make_vocab([f"w{chr(97 + i)}" for i in range(10)])
        params = EtmParameters(rho=rng.normal(size=(10, 4)),
                               alpha=rng.normal(size=(3, 4)))
        path = tmp_path / "etm.json"
        params.save(str(path))
        redux = EtmParameters.load(str(path))
        assert np.array_equal(redux.rho, params.rho)
        assert np.array_equal(redux.alpha, params.alpha)
        model = model_from_etm(params, vocab)
        assert model.k == 3


class TestInferDocTopics:
    def test_k1_theta_is_one(self):
        corpus = unigram_corpus(["aa bb aa"])
        vocab = build_vocabulary(corpus, min_count=1)
        model = train_lda(corpus, vocab, k=1, sweeps=5, seed=0)
        theta = infer_doc_topics(model, corpus.documents[0], 10, seed=1)
        assert theta.theta.shape == (1,)
        assert theta.theta[0] == 1.0

    def test_planted_doc_dominated_by_its_topic(self):
        corpus, (set_a, _) = make_disjoint_topic_corpus(n_docs=200, words_per_topic=20,
                                                        doc_length=300, seed=3)
        vocab = build_vocabulary(corpus, min_count=1)
        model = train_lda(corpus, vocab, k=2, sweeps=100, seed=1)
        doc = corpus.documents[0]  # planted on topic A by construction
        theta = infer_doc_topics(model, doc, 50, seed=2)
        learned_a = max(range(2), key=lambda t: sum(
            model.word_topic[t, model.vocabulary.index[w]] for w in set_a))
        assert theta.theta[learned_a] >= 0.8

    def test_thetas_sum_to_one(self, planted_pack):
        model = planted_pack["model"]
        for doc in list(planted_pack["corpus"])[:100]:
            theta = infer_doc_topics(model, doc, 10, seed=3)
            assert abs(float(theta.theta.sum()) - 1.0) < 1e-9

    def test_zero_invocab_tokens_error_names_doc(self):
        corpus = unigram_corpus(["aa bb"])
        vocab = build_vocabulary(corpus, min_count=1)
        model = train_lda(corpus, vocab, k=2, sweeps=5, seed=0)
        stranger = Document.make("ghost", "g", "zz qq")
        with pytest.raises(TopicModelError, match="ghost"):
            infer_doc_topics(model, stranger, 10, seed=0)

    def test_deterministic(self, planted_pack):
        model = planted_pack["model"]
        doc = planted_pack["corpus"].documents[0]
        a = infer_doc_topics(model, doc, 25, seed=42)
        b = infer_doc_topics(model, doc, 25, seed=42)
        assert np.array_equal(a.theta, b.theta)


class TestCoherence:
    def _model_over(self, words, rows):
        vocab = make_vocab(words)
        return TopicModel(k=len(rows), vocabulary=vocab,
                          word_topic=np.array(rows, dtype=float),
                          hyper_alpha=1.0, hyper_beta=0.01)

    def test_always_cooccurring_top_words_score_one(self):
        # two top words that appear in exactly the same half of the documents
        words = ["aa", "bb", "cc", "dd"]
        row = [0.4, 0.4, 0.1, 0.1]
        model = self._model_over(words, [row])
        corpus = unigram_corpus(["aa bb", "aa bb", "cc dd", "cc dd"])
        assert topic_coherence(model, corpus, top_k=2) == 1.0

    def test_never_cooccurring_top_words_score_floor(self):
        words = ["aa", "bb"]
        model = self._model_over(words, [[0.6, 0.4]])
        corpus = unigram_corpus(["aa", "bb", "aa", "bb"])
        assert topic_coherence(model, corpus, top_k=2) == -1.0

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        words = [f"w{chr(97 + i)}{chr(97 + j)}" for i in range(5) for j in range(5)]
        model = random_model(rng, k=3, words=words)
        texts = [" ".join(rng.choice(words, size=rng.integers(3, 15))) for _ in range(50)]
        corpus = unigram_corpus(texts)

        def oracle():
            doc_sets = [set(d.norm_tokens) for d in corpus]
            n_docs = len(doc_sets)
            per_topic = []
            for t in range(model.k):
                tops = top_words(model, t, 10)
                pair_scores = []
                for w1, w2 in combinations(tops, 2):
                    c1 = sum(1 for s in doc_sets if w1 in s)
                    c2 = sum(1 for s in doc_sets if w2 in s)
                    c12 = sum(1 for s in doc_sets if w1 in s and w2 in s)
                    if c12 == 0:
                        pair_scores.append(-1.0)
                    elif c12 == n_docs:
                        pair_scores.append(1.0)
                    else:
                        p12 = (c12 + 1) / (n_docs + 1)
                        p1 = (c1 + 1) / (n_docs + 1)
                        p2 = (c2 + 1) / (n_docs + 1)
                        pair_scores.append(math.log(p12 / (p1 * p2)) / (-math.log(p12)))
                per_topic.append(sum(pair_scores) / len(pair_scores))
            return sum(per_topic) / len(per_topic)

        assert abs(topic_coherence(model, corpus, top_k=10) - oracle()) < 1e-9


class TestDiversity:
    def test_single_topic_is_one(self):
        rng = np.random.default_rng(2)
        model = random_model(rng, k=1, words=[f"w{chr(97 + i)}" for i in range(26)])
        assert topic_diversity(model, top_k=10) == 1.0

    def test_identical_topics_half(self):
        words = [f"w{chr(97 + i)}" for i in range(10)]
        row = np.linspace(0.3, 0.01, 10)
        row = row / row.sum()
        vocab = make_vocab(words)
        model = TopicModel(k=2, vocabulary=vocab, word_topic=np.vstack([row, row]),
                           hyper_alpha=1.0, hyper_beta=0.01)
        for top_k in (1, 3, 5, 10):
            assert topic_diversity(model, top_k=top_k) == 0.5

    def test_matches_set_union_oracle(self):
        rng = np.random.default_rng(23)
        words = [f"w{chr(97 + i)}{chr(97 + j)}" for i in range(6) for j in range(6)]
        model = random_model(rng, k=5, words=words)
        top_k = 7
        union = set()
        for t in range(5):
            union |= set(top_words(model, t, top_k))
        assert topic_diversity(model, top_k=top_k) == len(union) / (5 * top_k)


class TestTopWords:
    def test_unique_maximum(self):
        words = ["aa", "bb", "cc"]
        model = TopicModel(k=1, vocabulary=make_vocab(words),
                           word_topic=np.array([[0.2, 0.5, 0.3]]),
                           hyper_alpha=1.0, hyper_beta=0.01)
        assert top_words(model, 0, 1) == ["bb"]

    def test_tie_breaks_toward_lower_index(self):
        words = ["aa", "bb", "cc"]
        model = TopicModel(k=1, vocabulary=make_vocab(words),
                           word_topic=np.array([[0.25, 0.5, 0.25]]),
                           hyper_alpha=1.0, hyper_beta=0.01)
        assert top_words(model, 0, 3) == ["bb", "aa", "cc"]

    def test_out_of_range_topic(self):
        rng = np.random.default_rng(1)
        model = random_model(rng, k=2, words=["aa", "bb"])
        with pytest.raises(IndexError):
            top_words(model, 2, 1)

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(31)
        words = [f"w{chr(97 + i)}{chr(97 + j)}" for i in range(8) for j in range(8)]
        model = random_model(rng, k=4, words=words)
        for t in range(4):
            row = model.word_topic[t]
            oracle = [w for _, _, w in sorted(
                (-row[i], i, w) for i, w in enumerate(words))][:12]
            assert top_words(model, t, 12) == oracle


class TestSelectTopicCount:
    def test_single_candidate(self):
        corpus = unigram_corpus(["aa bb cc dd ee ff" * 3] * 4)
        vocab = build_vocabulary(corpus, min_count=1)
        result = select_topic_count(corpus, vocab, [3], sweeps=10, seed=0)
        assert result.chosen_k == 3
        assert len(result.table) == 1

    def test_planted_structure_selects_two(self):
        corpus, _ = make_disjoint_topic_corpus(n_docs=120, words_per_topic=20,
                                               doc_length=80, seed=9)
        vocab = build_vocabulary(corpus, min_count=1)
        result = select_topic_count(corpus, vocab, [1, 2, 8], sweeps=80, seed=1)
        assert result.chosen_k == 2
        # exhaustive check: the chosen row maximizes the recorded products
        products = {row["k"]: row["product"] for row in result.table}
        assert result.chosen_k == max(products, key=lambda k: (products[k], -k))


class TestModelSerialization:
    def test_round_trip_exact(self, tmp_path, planted_pack):
        model = planted_pack["model"]
        path = tmp_path / "model.json"
        save_model(model, str(path))
        redux = load_model(str(path))
        assert redux.k == model.k
        assert np.array_equal(redux.word_topic, model.word_topic)
        assert redux.vocabulary.words == model.vocabulary.words
        assert redux.content_hash() == model.content_hash()

    def test_vocab_hash_mismatch_detected(self, tmp_path):
        rng = np.random.default_rng(3)
        model = random_model(rng, k=2, words=["aa", "bb", "cc"])
        payload = model.to_dict()
        payload["vocab_sha256"] = "0" * 64
        import json
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(TopicModelError, match="hash"):
            load_model(str(path))
