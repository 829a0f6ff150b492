"""Exploratory attack: budgeted label collection from the oracle, substitute
training on the collected labels, decision-threshold optimization, and
divergence measurement between two classifiers."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from . import nnet
from .corpus import Sample, SampleSet, Vocabulary, featurize, featurize_all
from .oracle import RateLimitedError


class BudgetExceededError(RuntimeError):
    """Raised before a call that would overrun the query budget.

    `partial` carries whatever was collected so far, so no labels are lost.
    """

    def __init__(self, message: str, partial: "CollectResult | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass
class QueryBudget:
    """Hard cap on oracle classify calls; one consumed unit per accepted call."""

    total: int
    consumed: int = 0

    @property
    def remaining(self) -> int:
        return self.total - self.consumed

    def spend(self, count: int = 1) -> None:
        if self.consumed + count > self.total:
            raise BudgetExceededError(f"budget of {self.total} calls exceeded")
        self.consumed += count


@dataclass
class CollectResult:
    labeled: SampleSet
    days_advanced: int


def collect_labels(oracle, samples, budget: QueryBudget) -> CollectResult:
    """Label every sample through the oracle, one classify call each.

    On a rate-limit rejection the simulated day is advanced automatically and
    the call retried; the number of day advances is reported. Raises
    BudgetExceededError (with partial results attached) before issuing any call
    the budget cannot cover.
    """
    provenance = getattr(samples, "provenance", "generated")
    labeled: list[Sample] = []
    days = 0
    for s in samples:
        if budget.remaining <= 0:
            raise BudgetExceededError(
                f"budget exhausted after {len(labeled)} of {len(samples)} samples",
                partial=CollectResult(SampleSet(labeled, provenance), days),
            )
        advanced_for_this_call = False
        while True:
            try:
                label = oracle.classify(s.text)
                break
            except RateLimitedError:
                if advanced_for_this_call:
                    raise  # a fresh day did not help; quota must be zero
                oracle.advance_day()
                days += 1
                advanced_for_this_call = True
        budget.spend(1)
        labeled.append(Sample(s.text, label))
    return CollectResult(SampleSet(labeled, provenance), days)


@dataclass(frozen=True)
class DivergenceReport:
    """Per-class disagreement rates between a reference labeling and another one.

    n1/n2 count reference labels per class, m1/m2 count disagreements on those
    samples; d1 = m1/n1, d2 = m2/n2, d_max = max(d1, d2), and d_avg is the
    overall disagreement rate (m1+m2)/(n1+n2).
    """

    n1: int
    n2: int
    m1: int
    m2: int
    d1: float
    d2: float
    d_max: float
    d_avg: float

    def to_dict(self) -> dict:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "m1": self.m1,
            "m2": self.m2,
            "d1": self.d1,
            "d2": self.d2,
            "d_max": self.d_max,
            "d_avg": self.d_avg,
        }


def divergence(labels_a, labels_b) -> DivergenceReport:
    """Disagreement of labels_b against reference labels_a (which plays the target)."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label vectors must have equal length")
    n1 = int(np.sum(a == 1))
    n2 = int(np.sum(a == 2))
    if n1 == 0 or n2 == 0:
        raise ValueError("reference labels must contain both classes")
    m1 = int(np.sum((a == 1) & (b == 2)))
    m2 = int(np.sum((a == 2) & (b == 1)))
    d1 = m1 / n1
    d2 = m2 / n2
    return DivergenceReport(n1, n2, m1, m2, d1, d2, max(d1, d2), (m1 + m2) / (n1 + n2))


def optimize_threshold(scores, true_labels) -> tuple[float, float]:
    """Threshold minimizing d_max of the rule "score < threshold => label 1".

    Candidates are 0, 1, and the midpoints of adjacent distinct sorted scores;
    ties resolve to the smallest candidate.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(true_labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    order = np.argsort(s, kind="stable")
    ss = s[order]
    yy = y[order]
    n1 = int(np.sum(yy == 1))
    n2 = int(np.sum(yy == 2))
    if n1 == 0 or n2 == 0:
        raise ValueError("labels must contain both classes")

    # cut position k: the k lowest-scoring samples are predicted class 1
    cum1 = np.concatenate([[0], np.cumsum(yy == 1)])
    cum2 = np.concatenate([[0], np.cumsum(yy == 2)])
    distinct = np.unique(ss)
    candidates: list[tuple[float, int]] = [(0.0, 0)]
    for lo, hi in zip(distinct, distinct[1:]):
        candidates.append(((lo + hi) / 2.0, int(np.searchsorted(ss, lo, side="right"))))
    candidates.append((1.0, int(np.searchsorted(ss, 1.0, side="left"))))

    best_t, best_d = None, None
    for t, k in candidates:
        m1 = n1 - int(cum1[k])  # class-1 samples predicted 2
        m2 = int(cum2[k])  # class-2 samples predicted 1
        d_max = max(m1 / n1, m2 / n2)
        if best_d is None or d_max < best_d:
            best_t, best_d = t, d_max
    return float(best_t), float(best_d)


@dataclass
class SubstituteClassifier:
    """Trained network plus decision threshold; predicts 1 iff score < threshold."""

    network: nnet.NetworkParams
    normalizer: nnet.Normalizer
    threshold: float
    vocab: Vocabulary

    def score(self, sample) -> float:
        return float(self.scores([sample])[0])

    def scores(self, samples) -> np.ndarray:
        texts = [s.text if isinstance(s, Sample) else s for s in samples]
        feats = featurize_all(texts, self.vocab)
        return nnet.predict_scores(self.network, self.normalizer, feats)

    def predict(self, sample) -> int:
        return 1 if self.score(sample) < self.threshold else 2

    def predict_from_scores(self, scores) -> np.ndarray:
        return np.where(np.asarray(scores, dtype=float) < self.threshold, 1, 2)

    def predict_many(self, samples) -> np.ndarray:
        return self.predict_from_scores(self.scores(samples))


def config_digest(config: nnet.TrainingConfig) -> str:
    blob = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def fit_substitute(
    labeled: SampleSet,
    config: nnet.TrainingConfig,
    vocab: Vocabulary,
    split_seed: int,
) -> tuple[SubstituteClassifier, DivergenceReport]:
    """Train a substitute on half the labeled data and pick its threshold on the rest.

    The labeled set is shuffled by split_seed and split 50/50; the network is
    trained on the first half, the threshold is optimized on the held-out half,
    and the returned divergence compares the substitute to the collected labels
    on that held-out half.
    """
    labels = labeled.labels()
    if len(set(labels)) < 2:
        raise ValueError("labeled data must contain both classes")
    n = len(labeled)
    rng = np.random.default_rng(split_seed)
    order = rng.permutation(n)
    train_idx = order[: n // 2]
    val_idx = order[n // 2 :]

    feats = featurize_all(labeled.texts(), vocab)
    y = np.asarray(labels)
    params, norm = nnet.train(list(zip(feats[train_idx], y[train_idx])), config)

    val_scores = nnet.predict_scores(params, norm, feats[val_idx])
    threshold, _ = optimize_threshold(val_scores, y[val_idx])
    substitute = SubstituteClassifier(params, norm, threshold, vocab)
    preds = substitute.predict_from_scores(val_scores)
    report = divergence(y[val_idx], preds)
    return substitute, report


def extraction_report(
    report: DivergenceReport,
    budget: QueryBudget,
    days_elapsed: int,
    config: nnet.TrainingConfig,
    seed: int,
) -> dict:
    """JSON-ready extraction summary."""
    out = report.to_dict()
    out.update(
        {
            "budget_used": budget.consumed,
            "days_elapsed": days_elapsed,
            "config_digest": config_digest(config),
            "seed": seed,
        }
    )
    return out


def save_substitute(path, substitute: SubstituteClassifier, config: nnet.TrainingConfig) -> None:
    payload = {
        "threshold": substitute.threshold,
        "weights": [w.tolist() for w in substitute.network.weights],
        "biases": [b.tolist() for b in substitute.network.biases],
        "normalizer_scale": substitute.normalizer.scale.tolist(),
        "vocab": [[w, c] for w, c in substitute.vocab.words],
        "config": asdict(config),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_substitute(path) -> tuple[SubstituteClassifier, nnet.TrainingConfig]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    network = nnet.NetworkParams(
        [np.asarray(w, dtype=float) for w in payload["weights"]],
        [np.asarray(b, dtype=float) for b in payload["biases"]],
    )
    norm = nnet.Normalizer(np.asarray(payload["normalizer_scale"], dtype=float))
    vocab = Vocabulary([(w, int(c)) for w, c in payload["vocab"]])
    config = nnet.TrainingConfig(**payload["config"])
    return SubstituteClassifier(network, norm, payload["threshold"], vocab), config
