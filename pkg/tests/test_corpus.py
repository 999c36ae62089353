import json
import string

import numpy as np
import pytest
from scipy.stats import chisquare

from genregap.corpus import (ConfigError, Corpus, CorpusError, Document, build_vocabulary,
                             emit, ingest, normalize, sample_window)
from genregap.rng import DetRng


class TestNormalize:
    def test_strips_punct_digits_and_lowercases(self):
        assert normalize("Hello, World 123!") == "hello world"

    def test_empty(self):
        assert normalize("") == ""

    def test_whitespace_collapsed(self):
        assert normalize("  a\t\tb\n\nc  ") == "a b c"

    def test_lowercase_toggle(self):
        assert normalize("Hello World", lowercase=False) == "Hello World"

    def test_digit_inside_word_splits(self):
        # digits become spaces, so they never merge neighbouring letters
        assert normalize("word1word") == "word word"

    def test_output_alphabet_random_strings(self):
        rng = np.random.default_rng(42)
        alphabet = string.ascii_letters + string.digits + string.punctuation + " \t\n"
        for _ in range(1000):
            length = int(rng.integers(0, 60))
            s = "".join(rng.choice(list(alphabet), size=length))
            out = normalize(s)
            assert all(ch.islower() or ch == " " for ch in out), repr(out)
            assert "  " not in out

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        alphabet = string.printable + "äÖß€«»"
        for _ in range(300):
            s = "".join(rng.choice(list(alphabet), size=int(rng.integers(0, 50))))
            once = normalize(s)
            assert normalize(once) == once


class TestIngest:
    def _write(self, path, rows):
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")

    def test_three_line_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        self._write(path, [
            {"id": "a", "genre": "NEWS", "text": "One two."},
            {"id": "b", "genre": "Review", "text": "Three!"},
            {"id": "c", "genre": "NEWS", "text": "Four 4."},
        ])
        corpus = ingest(str(path))
        assert len(corpus) == 3
        assert corpus.genres == {"NEWS", "Review"}
        assert corpus.by_id["a"].raw_text == "One two."
        assert corpus.by_id["c"].norm_text == "four"

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        self._write(path, [
            {"id": "d1", "genre": "g", "text": "x"},
            {"id": "d1", "genre": "g", "text": "y"},
        ])
        with pytest.raises(CorpusError, match="duplicate"):
            ingest(str(path))

    def test_malformed_record_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "genre": "g", "text": "x"}\n{oops\n', encoding="utf-8")
        with pytest.raises(CorpusError, match=":2"):
            ingest(str(path))

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        self._write(path, [{"id": "a", "genre": "g"}])
        with pytest.raises(CorpusError, match=":1"):
            ingest(str(path))

    def test_order_matches_file_order(self, tmp_path):
        rows = [{"id": f"doc{i:04d}", "genre": "g", "text": f"token{i} body"}
                for i in range(1000)]
        path = tmp_path / "big.jsonl"
        self._write(path, rows)
        corpus = ingest(str(path))
        # independent line-by-line reader as the order oracle
        with open(path, encoding="utf-8") as fh:
            expected = [json.loads(line)["id"] for line in fh if line.strip()]
        assert [d.id for d in corpus] == expected

    def test_round_trip_preserves_everything(self, tmp_path):
        rows = [
            {"id": "a", "genre": "g", "text": "Ünïcode — text 42!", "extra_field": [1, 2]},
            {"id": "b", "genre": "h", "text": "plain", "nested": {"k": "v"}},
        ]
        src = tmp_path / "in.jsonl"
        self._write(src, rows)
        corpus = ingest(str(src))
        dst = tmp_path / "out.jsonl"
        emit(corpus, str(dst))
        redux = ingest(str(dst))
        for row in rows:
            doc, doc2 = corpus.by_id[row["id"]], redux.by_id[row["id"]]
            assert doc2.raw_text == doc.raw_text == row["text"]
            assert doc2.genre == doc.genre
            assert dict(doc2.extra) == dict(doc.extra)


class TestSampleWindow:
    def test_short_doc_returned_whole(self):
        doc = Document.make("d", "g", "x" * 400)
        assert sample_window(doc, 1000, DetRng(1)) == doc.norm_text

    def test_exact_width_offset_zero(self):
        doc = Document.make("d", "g", "a" * 1000)
        for seed in range(5):
            assert sample_window(doc, 1000, DetRng(seed)) == doc.norm_text

    def test_invalid_width(self):
        doc = Document.make("d", "g", "abc")
        with pytest.raises(ConfigError):
            sample_window(doc, 0, DetRng(1))

    def test_window_is_substring(self):
        rng = DetRng(3)
        doc = Document.make("d", "g", "word " * 500)
        for _ in range(50):
            assert sample_window(doc, 100, rng) in doc.norm_text

    def test_offset_uniformity(self):
        # length-3000 normalized doc, width 1000 -> offsets uniform on [0, 2000];
        # random letters make each window's offset uniquely recoverable
        gen = np.random.default_rng(0)
        text = "".join(gen.choice(list(string.ascii_lowercase), size=3000))
        doc = Document.make("d", "g", text)
        assert len(doc.norm_text) == 3000
        rng = DetRng(123)
        draws = 10_000
        offsets = np.empty(draws, dtype=np.int64)
        for i in range(draws):
            window = sample_window(doc, 1000, rng)
            assert len(window) == 1000
            offsets[i] = doc.norm_text.index(window)
        hist, _ = np.histogram(offsets, bins=40, range=(0, 2001))
        result = chisquare(hist)
        assert result.pvalue > 0.01


class TestVocabulary:
    def _corpus(self, texts):
        docs = [Document.make(f"d{i}", "g", t) for i, t in enumerate(texts)]
        return Corpus.from_documents(docs)

    def test_direct_counts(self):
        vocab = build_vocabulary(self._corpus(["a a b", "a c"]), min_count=1)
        assert set(vocab.words) == {"a", "b", "c"}
        counts = dict(zip(vocab.words, vocab.counts))
        assert counts == {"a": 3, "b": 1, "c": 1}

    def test_stoplist_removes_top(self):
        vocab = build_vocabulary(self._corpus(["a a b", "a c"]), min_count=1, stop_top_n=1)
        assert set(vocab.words) == {"b", "c"}
        assert vocab.stoplist == {"a"}

    def test_min_count_filter(self):
        vocab = build_vocabulary(self._corpus(["a a b", "a c"]), min_count=2)
        assert set(vocab.words) == {"a"}

    def test_empty_vocabulary_is_error(self):
        with pytest.raises(ConfigError):
            build_vocabulary(self._corpus(["a b"]), min_count=5)

    def test_indices_dense_and_stoplist_disjoint(self):
        vocab = build_vocabulary(self._corpus(["a a a b b c d", "e f a b"]),
                                 min_count=1, stop_top_n=2)
        assert sorted(vocab.index.values()) == list(range(len(vocab)))
        assert not (vocab.stoplist & set(vocab.words))

    def test_counts_match_hash_count_oracle(self):
        rng = np.random.default_rng(11)
        words = [f"w{chr(ord('a') + i // 6)}{chr(ord('a') + i % 6)}" for i in range(30)]
        texts = [" ".join(rng.choice(words, size=50)) for _ in range(20)]
        corpus = self._corpus(texts)
        oracle: dict[str, int] = {}
        for text in texts:
            for tok in text.split():
                oracle[tok] = oracle.get(tok, 0) + 1
        vocab = build_vocabulary(corpus, min_count=1)
        assert dict(zip(vocab.words, vocab.counts)) == oracle


class TestCorpusInvariants:
    def test_undeclared_genre_rejected(self):
        doc = Document.make("a", "g", "x")
        with pytest.raises(CorpusError):
            Corpus(documents=(doc,), genres=frozenset({"h"}))

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusError):
            Corpus(documents=(), genres=frozenset())

    def test_norm_text_has_no_digits_or_punct(self, planted_pack):
        for doc in list(planted_pack["corpus"])[:50]:
            assert not any(ch.isdigit() for ch in doc.norm_text)
            assert not any(ch in string.punctuation for ch in doc.norm_text)
