import numpy as np
import pytest

from genregap.corpus import Corpus, Document, Vocabulary, build_vocabulary
from genregap.splits import score_corpus
from genregap.synthkit import PlantedSpec, make_biased_corpus
from genregap.topics import TopicModel, train_lda


def make_vocab(words):
    """Vocabulary over the given words with synthetic descending counts."""
    n = len(words)
    return Vocabulary(words=tuple(words), counts=tuple(range(n, 0, -1)),
                      stoplist=frozenset())


def random_model(rng: np.random.Generator, k: int, words) -> TopicModel:
    """TopicModel with Dirichlet-random rows over the given words."""
    vocab = make_vocab(words)
    word_topic = rng.dirichlet(np.ones(len(words)), size=k)
    return TopicModel(k=k, vocabulary=vocab, word_topic=word_topic,
                      hyper_alpha=50.0 / k, hyper_beta=0.01)


@pytest.fixture(scope="session")
def tiny_corpus():
    docs = [
        Document.make("d1", "news", "alpha beta gamma alpha"),
        Document.make("d2", "news", "beta beta delta"),
        Document.make("d3", "blog", "gamma alpha epsilon"),
        Document.make("d4", "blog", "delta epsilon epsilon alpha"),
    ]
    return Corpus.from_documents(docs)


@pytest.fixture(scope="session")
def planted_pack():
    """One shared default-spec pipeline: corpus, truth, vocab, model, scores."""
    spec = PlantedSpec(seed=11)
    corpus, truth = make_biased_corpus(spec)
    vocab = build_vocabulary(corpus, min_count=2)
    model = train_lda(corpus, vocab, k=spec.topics, sweeps=150, seed=5)
    scores, _ = score_corpus(corpus, model, fold_in_sweeps=30, seed=7)
    return {"spec": spec, "corpus": corpus, "truth": truth, "vocab": vocab,
            "model": model, "scores": scores}
