"""Built-in genre classifier: bag-of-words multinomial logistic regression
trained by mini-batch gradient descent with off-topic-validation early
stopping, plus an external-adapter path for PLM classifiers.

The built-in model exists to make the methodology testable at desk scale;
its claims (the gap exists, topical augmentation narrows it) do not depend
on the classifier architecture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adapter import AdapterClient
from .corpus import ConfigError, Document, Vocabulary, normalize, sample_window
from .evaluate import macro_f1
from .rng import DetRng, derive_seed


class TrainingError(Exception):
    """Divergence or unusable training input."""


def featurize(text: str, vocab: Vocabulary) -> dict[int, int]:
    """In-vocabulary token counts; expects already-normalized text."""
    index = vocab.index
    out: dict[int, int] = {}
    for tok in text.split():
        col = index.get(tok)
        if col is not None:
            out[col] = out.get(col, 0) + 1
    return out


def _dense(features: Sequence[dict[int, int]], v: int, sublinear: bool,
           normalize_rows: bool) -> np.ndarray:
    x = np.zeros((len(features), v), dtype=np.float64)
    for row, feats in enumerate(features):
        for col, count in feats.items():
            x[row, col] = count
    return _transform(x, sublinear, normalize_rows)


def _transform(x: np.ndarray, sublinear: bool, normalize_rows: bool) -> np.ndarray:
    if sublinear:
        np.log1p(x, out=x)
    if normalize_rows:
        norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
        np.divide(x, norms, out=x, where=norms > 0)
    return x


class _WindowedDoc:
    """Pre-tokenized view of one document for fast window featurization.

    norm_text is single-space separated, so token character offsets are exact;
    a window keeps the tokens that lie fully inside it.
    """

    def __init__(self, doc: Document, vocab: Vocabulary):
        index = vocab.index
        ids: list[int] = []
        starts: list[int] = []
        ends: list[int] = []
        pos = 0
        for tok in doc.norm_tokens:
            col = index.get(tok)
            if col is not None:
                ids.append(col)
                starts.append(pos)
                ends.append(pos + len(tok))
            pos += len(tok) + 1
        self.text_len = len(doc.norm_text)
        self.ids = np.array(ids, dtype=np.int64)
        self.starts = np.array(starts, dtype=np.int64)
        self.ends = np.array(ends, dtype=np.int64)

    def window_ids(self, width: int, rng: DetRng) -> np.ndarray:
        if self.text_len <= width:
            return self.ids
        start = rng.randint(self.text_len - width + 1)
        lo = int(np.searchsorted(self.starts, start, side="left"))
        hi = int(np.searchsorted(self.ends, start + width, side="right"))
        return self.ids[lo:hi]


def _window_matrix(windowed: Sequence[_WindowedDoc], v: int, width: int, rng: DetRng,
                   sublinear: bool, normalize_rows: bool) -> np.ndarray:
    x = np.zeros((len(windowed), v), dtype=np.float64)
    for row, wd in enumerate(windowed):
        ids = wd.window_ids(width, rng)
        if len(ids):
            x[row] = np.bincount(ids, minlength=v)
    return _transform(x, sublinear, normalize_rows)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2.0   # unit-norm features keep gradients small
    l2: float = 1e-4
    epochs: int = 60
    batch_size: int = 32
    window: int = 1000
    fresh_windows: bool = True   # redraw the training window each epoch
    sublinear_tf: bool = True    # log(1 + count) features; raw counts if False
    l2_normalize: bool = True    # unit-length feature vectors after the tf transform
    seed: int = 0

    # Above this rate, per-epoch training loss is no longer guaranteed to be
    # monotone on desk-scale corpora; the non-increasing-loss check applies
    # at or below it.
    STABLE_LEARNING_RATE = 2.0


@dataclass(frozen=True)
class ClassifierModel:
    """Weights (G x V), biases (G), and the training record of the best epoch."""

    weights: np.ndarray
    biases: np.ndarray
    genres: tuple[str, ...]
    vocabulary: Vocabulary
    config: TrainConfig
    best_epoch: int = -1
    best_val_f1: float = float("nan")
    train_loss_history: tuple[float, ...] = ()
    val_f1_history: tuple[float, ...] = ()

    def __post_init__(self):
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise TrainingError("model weights must be finite")

    def scores(self, text: str) -> np.ndarray:
        feats = featurize(normalize(text), self.vocabulary)
        sublinear = self.config.sublinear_tf
        values = {col: (math.log1p(count) if sublinear else float(count))
                  for col, count in feats.items()}
        if self.config.l2_normalize and values:
            norm = math.sqrt(sum(v * v for v in values.values()))
            if norm > 0:
                values = {col: v / norm for col, v in values.items()}
        logits = self.biases.copy()
        for col, value in values.items():
            logits += self.weights[:, col] * value
        logits -= logits.max()
        expd = np.exp(logits)
        return expd / expd.sum()


def predict(model: ClassifierModel, text: str) -> tuple[str, dict[str, float]]:
    """Argmax of softmax(Wx + b); ties break toward the earlier genre."""
    probs = model.scores(text)
    label = model.genres[int(np.argmax(probs))]
    return label, {g: float(p) for g, p in zip(model.genres, probs)}


def predict_batch(model: ClassifierModel, texts: Sequence[str]) -> list[str]:
    """Vectorized argmax labels for many texts; matches predict() labels."""
    cfg = model.config
    feats = [featurize(normalize(t), model.vocabulary) for t in texts]
    x = _dense(feats, len(model.vocabulary), cfg.sublinear_tf, cfg.l2_normalize)
    logits = x @ model.weights.T + model.biases
    return [model.genres[i] for i in np.argmax(logits, axis=1)]


def loss_and_grad(weights: np.ndarray, biases: np.ndarray, x: np.ndarray,
                  y: np.ndarray, l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with L2 on weights (not biases), and its gradients."""
    n = x.shape[0]
    logits = x @ weights.T + biases
    logits -= logits.max(axis=1, keepdims=True)
    expd = np.exp(logits)
    probs = expd / expd.sum(axis=1, keepdims=True)
    eps_rows = probs[np.arange(n), y]
    loss = float(-np.log(eps_rows).mean() + 0.5 * l2 * float((weights ** 2).sum()))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    grad_w = delta.T @ x / n + l2 * weights
    grad_b = delta.mean(axis=0)
    return loss, grad_w, grad_b


def train_classifier(train_docs: Sequence[Document], val_docs: Sequence[Document],
                     vocab: Vocabulary, config: TrainConfig = TrainConfig()) -> ClassifierModel:
    """Gradient-descent training with per-epoch validation early stopping.

    Draws one window per document per epoch (fresh_windows) or fixes one
    window per document up front; validation windows are always fixed so the
    early-stopping comparison is stable. Returns the parameters of the epoch
    with the best validation macro-F1. Deterministic given (data, seed).
    """
    genres = tuple(sorted({d.genre for d in train_docs}))
    if len(genres) < 2:
        raise TrainingError(f"training set has {len(genres)} genre(s); need at least 2")
    if not val_docs:
        raise TrainingError("validation set is empty")
    genre_ix = {g: i for i, g in enumerate(genres)}
    y = np.array([genre_ix[d.genre] for d in train_docs], dtype=np.int64)
    val_gold = [d.genre for d in val_docs]

    v = len(vocab)
    weights = np.zeros((len(genres), v), dtype=np.float64)
    biases = np.zeros(len(genres), dtype=np.float64)

    window_rng = DetRng(derive_seed(config.seed, "train_windows"))
    val_rng = DetRng(derive_seed(config.seed, "val_windows"))
    shuffle_rng = DetRng(derive_seed(config.seed, "batch_order"))

    train_windowed = [_WindowedDoc(d, vocab) for d in train_docs]
    val_windowed = [_WindowedDoc(d, vocab) for d in val_docs]
    val_x = _window_matrix(val_windowed, v, config.window, val_rng,
                           config.sublinear_tf, config.l2_normalize)
    fixed_x = None
    if not config.fresh_windows:
        fixed_x = _window_matrix(train_windowed, v, config.window, window_rng,
                                 config.sublinear_tf, config.l2_normalize)

    best = {"epoch": -1, "f1": -1.0, "weights": weights.copy(), "biases": biases.copy()}
    loss_history: list[float] = []
    f1_history: list[float] = []

    n = len(train_docs)
    for epoch in range(config.epochs):
        x = fixed_x if fixed_x is not None else _window_matrix(
            train_windowed, v, config.window, window_rng,
            config.sublinear_tf, config.l2_normalize)
        order = list(range(n))
        shuffle_rng.shuffle(order)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grad_w, grad_b = loss_and_grad(weights, biases, x[batch], y[batch], config.l2)
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged at epoch {epoch} (non-finite loss)")
            weights -= config.learning_rate * grad_w
            biases -= config.learning_rate * grad_b

        epoch_loss, _, _ = loss_and_grad(weights, biases, x, y, config.l2)
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"training diverged at epoch {epoch} (non-finite loss)")
        loss_history.append(epoch_loss)

        val_logits = val_x @ weights.T + biases
        val_pred = [genres[i] for i in np.argmax(val_logits, axis=1)]
        val_f1 = macro_f1(val_pred, val_gold, genres)
        f1_history.append(val_f1)
        # ties go to the later epoch: when validation saturates, prefer the
        # model that saw the most training rather than an epoch lottery
        if val_f1 >= best["f1"]:
            best = {"epoch": epoch, "f1": val_f1,
                    "weights": weights.copy(), "biases": biases.copy()}

    return ClassifierModel(weights=best["weights"], biases=best["biases"], genres=genres,
                           vocabulary=vocab, config=config, best_epoch=best["epoch"],
                           best_val_f1=best["f1"], train_loss_history=tuple(loss_history),
                           val_f1_history=tuple(f1_history))


def save_classifier(model: ClassifierModel, path: str) -> None:
    from dataclasses import asdict

    from .manifest import atomic_write_text, canonical_dumps
    payload = {
        "kind": "classifier_model",
        "genres": list(model.genres),
        "weights": [[float(x) for x in row] for row in model.weights],
        "biases": [float(x) for x in model.biases],
        "vocabulary": model.vocabulary.to_dict(),
        "config": asdict(model.config),
        "best_epoch": model.best_epoch,
        "best_val_f1": model.best_val_f1,
    }
    atomic_write_text(path, canonical_dumps(payload) + "\n")


def load_classifier(path: str) -> ClassifierModel:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return ClassifierModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        biases=np.array(payload["biases"], dtype=np.float64),
        genres=tuple(payload["genres"]),
        vocabulary=Vocabulary.from_dict(payload["vocabulary"]),
        config=TrainConfig(**payload["config"]),
        best_epoch=int(payload["best_epoch"]),
        best_val_f1=float(payload["best_val_f1"]))


class ExternalClassifier:
    """Adapter-backed classifier with the same predict surface as the built-in."""

    def __init__(self, client: AdapterClient, genres: Sequence[str]):
        self.client = client
        self.genres = tuple(genres)

    def train(self, train_manifest: str, val_manifest: str, **config) -> dict:
        return self.client.train("classifier", train_path=train_manifest,
                                 val_path=val_manifest, config=config)

    def predict_batch(self, texts: Sequence[str]) -> list[str]:
        return self.client.predict(texts)
