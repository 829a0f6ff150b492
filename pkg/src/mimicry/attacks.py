"""Follow-on attacks driven by the substitute: evasion sample selection near the
decision threshold, and the causative attack that feeds confidently-wrong
labels back to the target for retraining."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .corpus import Sample, SampleSet
from .extract import DivergenceReport, QueryBudget, SubstituteClassifier, collect_labels, divergence

EVASION_OBJECTIVES = ("average_error", "force_1_to_2", "force_2_to_1")


@dataclass
class EvasionSelection:
    """Samples picked for an evasion attempt; `short` flags a one-sided objective
    that could not fill the requested count."""

    samples: list[Sample]
    short: bool = False


def select_evasion(
    substitute: SubstituteClassifier, pool, n: int, objective: str = "average_error"
) -> EvasionSelection:
    """Pick the n pool samples the target is most likely to misclassify.

    average_error takes the samples closest to the threshold on either side;
    the force_* objectives restrict to one side of the threshold (samples the
    substitute labels 2 for force_1_to_2, and vice versa). Ties keep pool
    order; the result is returned in pool order.
    """
    if objective not in EVASION_OBJECTIVES:
        raise ValueError(f"unknown evasion objective {objective!r}")
    if n > len(pool):
        raise ValueError("n exceeds pool size")
    if n == 0:
        return EvasionSelection([])
    scores = substitute.scores(pool)
    threshold = substitute.threshold
    if objective == "average_error":
        eligible = np.arange(len(pool))
        key = np.abs(scores - threshold)
    elif objective == "force_1_to_2":
        eligible = np.flatnonzero(scores >= threshold)
        key = scores - threshold
    else:
        eligible = np.flatnonzero(scores < threshold)
        key = threshold - scores
    ranked = eligible[np.argsort(key[eligible], kind="stable")]
    picked = sorted(int(i) for i in ranked[:n])
    return EvasionSelection([pool[i] for i in picked], short=len(picked) < n)


def misclassification_rate(truth_labels, predicted_labels) -> float:
    a = np.asarray(truth_labels)
    b = np.asarray(predicted_labels)
    if a.shape != b.shape:
        raise ValueError("label vectors must have equal length")
    return float(np.mean(a != b))


@dataclass
class EvasionReport:
    selected_error_rate: float
    baseline_error_rate: float
    selected_size: int
    baseline_size: int

    def to_dict(self) -> dict:
        return {
            "selected_error_rate": self.selected_error_rate,
            "baseline_error_rate": self.baseline_error_rate,
            "selected_size": self.selected_size,
            "baseline_size": self.baseline_size,
        }


def evasion_error_rates(
    selected_truth, selected_target_labels, baseline_truth, baseline_target_labels
) -> EvasionReport:
    """Target error rates on a selected set versus a baseline set, given the
    target's labels on each (however they were obtained)."""
    return EvasionReport(
        selected_error_rate=misclassification_rate(selected_truth, selected_target_labels),
        baseline_error_rate=misclassification_rate(baseline_truth, baseline_target_labels),
        selected_size=len(selected_truth),
        baseline_size=len(baseline_truth),
    )


def evaluate_evasion(target, selected, baseline) -> EvasionReport:
    """Ground-truth evaluation against a directly held target model.

    Requires every sample to carry its true label (a generated corpus does).
    """
    for s in list(selected) + list(baseline):
        if s.label is None:
            raise ValueError("evasion evaluation needs ground-truth labels on every sample")
    sel_truth = [s.label for s in selected]
    base_truth = [s.label for s in baseline]
    sel_pred = [target.classify_text(s.text) for s in selected]
    base_pred = [target.classify_text(s.text) for s in baseline]
    return evasion_error_rates(sel_truth, sel_pred, base_truth, base_pred)


def _text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class PoisonItem:
    sample: Sample
    score: float
    original_label: int  # the substitute's prediction
    flipped_label: int


@dataclass
class PoisonPlan:
    """Feedback payload: selected samples with their labels flipped."""

    p: float
    items: list[PoisonItem]

    def __post_init__(self):
        for item in self.items:
            if item.flipped_label == item.original_label:
                raise ValueError("poison plan contains an unflipped label")

    def __len__(self) -> int:
        return len(self.items)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "size": len(self.items),
            "items": [
                {
                    "sample_digest": _text_digest(item.sample.text),
                    "score": item.score,
                    "original_label": item.original_label,
                    "flipped_label": item.flipped_label,
                }
                for item in self.items
            ],
        }


def _flip_items(pool, scores, indices, threshold: float) -> list[PoisonItem]:
    items = []
    for i in indices:
        original = 1 if scores[i] < threshold else 2
        items.append(PoisonItem(pool[i], float(scores[i]), original, 3 - original))
    return items


def plan_poison(substitute: SubstituteClassifier, pool, p: float) -> PoisonPlan:
    """Flip the substitute labels of the top p/2% and bottom p/2% scored samples.

    Both cuts take floor(|pool| * p / 200) samples from one stable ascending
    sort of the scores, so the plan never exceeds the declared p% and the two
    cuts never overlap.
    """
    if not 0.0 <= p <= 100.0:
        raise ValueError("p must be in [0, 100]")
    if len(pool) == 0:
        raise ValueError("pool is empty")
    scores = substitute.scores(pool)
    k = math.floor(len(pool) * p / 200.0)
    if k == 0:
        return PoisonPlan(p, [])
    order = np.argsort(scores, kind="stable")
    bottom = [int(i) for i in order[:k]]
    top = [int(i) for i in order[-k:]]
    return PoisonPlan(p, _flip_items(pool, scores, bottom + top, substitute.threshold))


def plan_random_flip_baseline(
    substitute: SubstituteClassifier, pool, count: int, seed: int
) -> PoisonPlan:
    """Control condition: flip the substitute labels of `count` uniform pool samples."""
    if count > len(pool):
        raise ValueError("count exceeds pool size")
    if count == 0:
        return PoisonPlan(0.0, [])
    scores = substitute.scores(pool)
    rng = np.random.default_rng(seed)
    picked = sorted(int(i) for i in rng.choice(len(pool), size=count, replace=False))
    p_equivalent = 100.0 * count / len(pool)
    return PoisonPlan(p_equivalent, _flip_items(pool, scores, picked, substitute.threshold))


@dataclass
class PoisonReport:
    """Impact of a causative attack: disagreement between the target before and
    after it retrained on the poisoned feedback."""

    divergence: DivergenceReport
    plan_size: int
    p: float
    budget_used: int
    days_advanced: int

    def to_dict(self) -> dict:
        out = self.divergence.to_dict()
        out.update(
            {
                "plan_size": self.plan_size,
                "p": self.p,
                "budget_used": self.budget_used,
                "days_advanced": self.days_advanced,
            }
        )
        return out


def run_causative(oracle, plan: PoisonPlan, eval_set, budget: QueryBudget) -> PoisonReport:
    """Submit the plan as user feedback, trigger a retrain, and measure the damage.

    The evaluation set is labeled through the public classify channel before
    any feedback is sent (the pre-attack snapshot) and again after the retrain;
    the report is the divergence between the two labelings.
    """
    start = budget.consumed
    before = collect_labels(oracle, eval_set, budget)
    for item in plan.items:
        oracle.submit_feedback(item.sample.text, item.flipped_label)
    oracle.retrain_with_feedback()
    after = collect_labels(oracle, eval_set, budget)
    report = divergence(before.labeled.labels(), after.labeled.labels())
    return PoisonReport(
        divergence=report,
        plan_size=len(plan),
        p=plan.p,
        budget_used=budget.consumed - start,
        days_advanced=before.days_advanced + after.days_advanced,
    )
