"""Simulated target classifier behind a strict daily call quota, with a feedback
channel and full retraining on corpus + feedback.

The target's internals are opaque to attack code: `classify` returns a label
and nothing else. Three model kinds are available so extraction results are
not an artifact of matching the substitute's architecture; the default is
multinomial Naive Bayes.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
from collections import Counter

import numpy as np

from . import nnet
from .corpus import LABELS, Sample, SampleSet, build_vocabulary, featurize, featurize_all, tokenize

MODEL_KINDS = ("naive_bayes", "logistic", "fnn")


class RateLimitedError(RuntimeError):
    """Daily call quota exhausted; retry after `retry_after_days` simulated days."""

    def __init__(self, retry_after_days: int = 1):
        super().__init__(f"daily quota exhausted; retry after {retry_after_days} day(s)")
        self.retry_after_days = retry_after_days


class InvalidRequestError(ValueError):
    """Malformed request (empty text, bad label); never consumes quota."""


class NaiveBayesModel:
    """Multinomial Naive Bayes with add-one smoothing over the training tokens."""

    kind = "naive_bayes"

    def __init__(self, log_prior: dict[int, float], word_log_prob: dict[str, tuple[float, float]]):
        self.log_prior = log_prior
        self.word_log_prob = word_log_prob

    @classmethod
    def fit(cls, corpus: SampleSet) -> "NaiveBayesModel":
        doc_counts = {1: 0, 2: 0}
        word_counts = {1: Counter(), 2: Counter()}
        for s in corpus:
            doc_counts[s.label] += 1
            word_counts[s.label].update(tokenize(s.text))
        vocab = sorted(set(word_counts[1]) | set(word_counts[2]))
        v = len(vocab)
        totals = {c: sum(word_counts[c].values()) for c in LABELS}
        n_docs = doc_counts[1] + doc_counts[2]
        log_prior = {c: math.log(doc_counts[c] / n_docs) for c in LABELS}
        word_log_prob = {}
        for w in vocab:
            word_log_prob[w] = tuple(
                math.log((word_counts[c][w] + 1) / (totals[c] + v)) for c in LABELS
            )
        return cls(log_prior, word_log_prob)

    def classify_text(self, text: str) -> int:
        s1, s2 = self.log_prior[1], self.log_prior[2]
        for tok in tokenize(text):
            lp = self.word_log_prob.get(tok)
            if lp is not None:
                s1 += lp[0]
                s2 += lp[1]
        return 1 if s1 >= s2 else 2

    def params_digest(self) -> str:
        blob = json.dumps(
            {
                "prior": {str(c): repr(v) for c, v in self.log_prior.items()},
                "words": {w: [repr(a), repr(b)] for w, (a, b) in sorted(self.word_log_prob.items())},
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class LogisticModel:
    """Bag-of-words logistic regression trained by full-batch gradient descent."""

    kind = "logistic"

    def __init__(self, vocab, weights: np.ndarray, bias: float):
        self.vocab = vocab
        self.weights = weights
        self.bias = bias

    @classmethod
    def fit(cls, corpus: SampleSet, iterations: int = 300, lr: float = 0.5) -> "LogisticModel":
        vocab = build_vocabulary(corpus, 5000)
        x = featurize_all(corpus.texts(), vocab).astype(float)
        y = np.asarray(corpus.labels()) - 1  # 0/1
        w = np.zeros(len(vocab))
        b = 0.0
        n = len(y)
        for _ in range(iterations):
            p = nnet.sigmoid(x @ w + b)
            err = p - y
            w -= lr * (x.T @ err) / n
            b -= lr * float(err.mean())
        return cls(vocab, w, b)

    def classify_text(self, text: str) -> int:
        p = nnet.sigmoid(featurize(text, self.vocab).astype(float) @ self.weights + self.bias)
        return 2 if p >= 0.5 else 1

    def params_digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.weights.tobytes())
        h.update(repr(self.bias).encode())
        for word, count in self.vocab.words:
            h.update(f"{word}:{count};".encode())
        return h.hexdigest()


class FnnModel:
    """Feedforward-network target; uses its own vocabulary, not the adversary's."""

    kind = "fnn"

    def __init__(self, vocab, params: nnet.NetworkParams, norm: nnet.Normalizer):
        self.vocab = vocab
        self.params = params
        self.norm = norm

    @classmethod
    def fit(cls, corpus: SampleSet, seed: int) -> "FnnModel":
        vocab = build_vocabulary(corpus, 500)
        config = nnet.TrainingConfig(
            hidden_layers=2,
            neurons_per_layer=30,
            minibatch_size=25,
            epochs=10,
            seed=seed,
        )
        x = featurize_all(corpus.texts(), vocab)
        pairs = list(zip(x, corpus.labels()))
        params, norm = nnet.train(pairs, config)
        return cls(vocab, params, norm)

    def classify_text(self, text: str) -> int:
        score = nnet.predict_score(self.params, self.norm, featurize(text, self.vocab))
        return 2 if score >= 0.5 else 1

    def params_digest(self) -> str:
        h = hashlib.sha256()
        for w in self.params.weights:
            h.update(w.tobytes())
        for b in self.params.biases:
            h.update(b.tobytes())
        h.update(self.norm.scale.tobytes())
        return h.hexdigest()


def train_target(corpus: SampleSet, kind: str = "naive_bayes", seed: int = 0):
    """Fit a target model of the requested kind; deterministic per corpus and seed."""
    labels = set(corpus.labels())
    if labels != {1, 2}:
        raise ValueError("target corpus must contain both classes")
    if kind == "naive_bayes":
        return NaiveBayesModel.fit(corpus)
    if kind == "logistic":
        return LogisticModel.fit(corpus)
    if kind == "fnn":
        return FnnModel.fit(corpus, seed)
    raise ValueError(f"unknown target kind {kind!r}")


def _merge_feedback(corpus: SampleSet, feedback: list[Sample]) -> SampleSet:
    """Corpus union feedback; feedback labels override corpus labels on the same text."""
    override = {s.text: s.label for s in feedback}
    corpus_texts = {s.text for s in corpus}
    merged = [Sample(s.text, override.get(s.text, s.label)) for s in corpus]
    merged.extend(s for s in feedback if s.text not in corpus_texts)
    return SampleSet(merged, provenance=corpus.provenance)


class TargetOracle:
    """Rate-limited classification service over a fitted target model.

    State transitions (quota, feedback buffer, model swap) are serialized under
    one lock so concurrent callers cannot oversubscribe the daily quota.
    """

    def __init__(
        self,
        corpus: SampleSet,
        kind: str = "naive_bayes",
        seed: int = 0,
        calls_per_day: int = 1000,
        feedback_rate_limited: bool = False,
    ):
        if calls_per_day < 0:
            raise ValueError("calls_per_day must be >= 0")
        self._lock = threading.Lock()
        self._corpus = corpus
        self.kind = kind
        self.seed = seed
        self.calls_per_day = calls_per_day
        self.feedback_rate_limited = feedback_rate_limited
        self.model = train_target(corpus, kind, seed)
        self.original_model = self.model  # pre-attack snapshot, kept for comparison
        self.calls_used_today = 0
        self.day = 0
        self.total_calls = 0
        self._feedback: list[Sample] = []

    def _check_text(self, text) -> str:
        if not isinstance(text, str) or not text.strip():
            raise InvalidRequestError("text must be a non-empty string")
        return text

    def _consume_quota(self) -> None:
        if self.calls_used_today >= self.calls_per_day:
            raise RateLimitedError(retry_after_days=1)
        self.calls_used_today += 1
        self.total_calls += 1

    def classify(self, text: str) -> int:
        """Label a text; consumes one quota unit. Returns the label and nothing else."""
        with self._lock:
            text = self._check_text(text)
            self._consume_quota()
            return self.model.classify_text(text)

    def advance_day(self) -> int:
        """Move the simulated clock one day forward, resetting the daily quota."""
        with self._lock:
            self.day += 1
            self.calls_used_today = 0
            return self.day

    def submit_feedback(self, text: str, label: int) -> None:
        """Stage a user-asserted label; takes effect only at the next retrain."""
        with self._lock:
            text = self._check_text(text)
            if label not in LABELS:
                raise InvalidRequestError(f"label must be 1 or 2, got {label!r}")
            if self.feedback_rate_limited:
                self._consume_quota()
            self._feedback.append(Sample(text, label))

    def retrain_with_feedback(self):
        """Refit on corpus plus staged feedback (feedback wins on conflicting texts)."""
        with self._lock:
            merged = _merge_feedback(self._corpus, self._feedback)
            self.model = train_target(merged, self.kind, self.seed)
            self._feedback = []
            return self.model

    def feedback_size(self) -> int:
        with self._lock:
            return len(self._feedback)

    def stats(self) -> dict:
        with self._lock:
            return {
                "calls_used_today": self.calls_used_today,
                "calls_per_day": self.calls_per_day,
                "day": self.day,
                "total_calls": self.total_calls,
            }
